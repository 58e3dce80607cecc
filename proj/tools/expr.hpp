#pragma once

// Arithmetic on numeric literals and `pi`, for angle-valued flags such as
// --beta1 pi/2-0.1. Grammar: expr = term {(+|-) term}; term = unary {(*|/) unary};
// unary = (+|-) unary | primary; primary = number | pi | ( expr ).

#include <bzo/errors.hpp>

#include <cctype>
#include <charconv>
#include <numbers>
#include <string>
#include <string_view>

namespace bzo::cli {

class ExprParser {
public:
    explicit ExprParser(std::string_view text) : s_(text) {}

    double parse() {
        const double v = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected trailing input");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw ConfigError("cannot parse '" + std::string(s_) + "': " + why);
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    double expr() {
        double v = term();
        while (true) {
            if (eat('+')) v += term();
            else if (eat('-')) v -= term();
            else return v;
        }
    }
    double term() {
        double v = unary();
        while (true) {
            if (eat('*')) v *= unary();
            else if (eat('/')) v /= unary();
            else return v;
        }
    }
    double unary() {
        if (eat('-')) return -unary();
        if (eat('+')) return unary();
        return primary();
    }
    double primary() {
        skip();
        if (eat('(')) {
            const double v = expr();
            if (!eat(')')) fail("missing ')'");
            return v;
        }
        if (s_.substr(pos_, 2) == "pi") {
            pos_ += 2;
            return std::numbers::pi;
        }
        double v{};
        const char* first = s_.data() + pos_;
        const auto res = std::from_chars(first, s_.data() + s_.size(), v);
        if (res.ec != std::errc{}) fail("expected a number or 'pi'");
        pos_ += static_cast<std::size_t>(res.ptr - first);
        return v;
    }

    std::string_view s_;
    std::size_t pos_{0};
};

inline double parse_expr(std::string_view text) { return ExprParser(text).parse(); }

/// "lo:hi:intervals" gives intervals + 1 points; a plain expression gives one point.
struct DeltaRange {
    double lo{};
    double hi{};
    std::size_t points{1};
};

inline DeltaRange parse_range(std::string_view text) {
    const auto c1 = text.find(':');
    if (c1 == std::string_view::npos) {
        const double v = parse_expr(text);
        return {v, v, 1};
    }
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string_view::npos) throw ConfigError("range must read lo:hi:intervals");
    DeltaRange r;
    r.lo = parse_expr(text.substr(0, c1));
    r.hi = parse_expr(text.substr(c1 + 1, c2 - c1 - 1));
    const double n = parse_expr(text.substr(c2 + 1));
    if (!(n >= 1.0) || n != static_cast<double>(static_cast<long>(n)))
        throw ConfigError("range interval count must be a positive integer");
    r.points = static_cast<std::size_t>(n) + 1;
    return r;
}

}  // namespace bzo::cli
