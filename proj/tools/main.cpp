#include "cli_runner.hpp"

int main(int argc, char** argv) { return bzo::cli::main_entry(argc, argv); }
