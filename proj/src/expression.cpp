#include "forge/expression.hpp"

#include <cctype>

namespace forge {

namespace {

class Parser {
public:
    Parser(const std::string& s, const ParseOptions& o) : s_(s), o_(o) {}

    ScalarField parse() {
        ScalarField f = expr();
        skip();
        if (i_ != s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
        return f;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(Errc::parse, "column " + std::to_string(i_ + 1) + ": " + msg + " in \"" + s_ + "\"");
    }

    void skip() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }

    bool eat(char c) {
        skip();
        if (i_ < s_.size() && s_[i_] == c) {
            ++i_;
            return true;
        }
        return false;
    }

    ScalarField expr() {
        ScalarField f = term();
        for (;;) {
            if (eat('+')) f = f + term();
            else if (eat('-')) f = f - term();
            else return f;
        }
    }

    ScalarField term() {
        ScalarField f = unary();
        for (;;) {
            if (eat('*')) f = f * unary();
            else if (eat('/')) f = f / unary();
            else return f;
        }
    }

    ScalarField unary() {
        if (eat('-')) return -unary();
        if (eat('+')) return unary();
        return power();
    }

    ScalarField power() {
        ScalarField base = primary();
        if (eat('^')) return pow(base, unary());
        return base;
    }

    ScalarField primary() {
        skip();
        if (i_ >= s_.size()) fail("unexpected end of expression");
        char c = s_[i_];
        if (eat('(')) {
            ScalarField f = expr();
            if (!eat(')')) fail("expected ')'");
            return f;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        fail("unexpected '" + std::string(1, c) + "'");
    }

    ScalarField number() {
        std::size_t start = i_;
        while (i_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[i_])) || s_[i_] == '.')) ++i_;
        if (i_ < s_.size() && (s_[i_] == 'e' || s_[i_] == 'E')) {
            std::size_t save = i_++;
            if (i_ < s_.size() && (s_[i_] == '+' || s_[i_] == '-')) ++i_;
            if (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) {
                while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
            } else {
                i_ = save;
            }
        }
        std::string tok = s_.substr(start, i_ - start);
        try {
            return ScalarField(parse_real(tok));
        } catch (const std::exception&) {
            i_ = start;
            fail("bad number '" + tok + "'");
        }
    }

    ScalarField identifier() {
        std::size_t start = i_;
        while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
        std::string id = s_.substr(start, i_ - start);
        skip();
        if (i_ < s_.size() && s_[i_] == '(') {
            ++i_;
            ScalarField a = expr();
            if (id == "pow") {
                if (!eat(',')) fail("pow expects two arguments");
                ScalarField b = expr();
                if (!eat(')')) fail("expected ')'");
                return pow(a, b);
            }
            if (!eat(')')) fail("expected ')'");
            if (id == "exp") return exp(a);
            if (id == "log" || id == "ln") return log(a);
            if (id == "sqrt") return sqrt(a);
            if (id == "abs") return abs(a);
            if (id == "sin") return sin(a);
            if (id == "cos") return cos(a);
            if (id == "tan") return tan(a);
            if (id == "atan") return atan(a);
            if (id == "sinh") return sinh(a);
            if (id == "cosh") return cosh(a);
            if (id == "tanh") return tanh(a);
            if (id == "sech") return sech(a);
            i_ = start;
            throw Error(Errc::unknown_identifier, "unknown function '" + id + "' in \"" + s_ + "\"");
        }
        static const std::pair<const char*, Axis> coords[] = {
            {"x1", Axis::x1}, {"x2", Axis::x2}, {"x3", Axis::x3},
            {"v", Axis::v},   {"y5", Axis::y5}, {"chi", Axis::chi}};
        for (const auto& [name, ax] : coords)
            if (id == name) return ScalarField::coordinate(ax);
        if (auto it = o_.aliases.find(id); it != o_.aliases.end()) return ScalarField::coordinate(it->second);
        if (auto it = o_.constants.find(id); it != o_.constants.end()) return ScalarField(it->second);
        if (id == "pi") return ScalarField(pi());
        if (id == "e") return ScalarField(boost::math::constants::e<real>());
        if (o_.allow_seeds) {
            for (int k = 0; k < kSeeds; ++k)
                if (id == seed_name(static_cast<Seed>(k))) return ScalarField::seed(static_cast<Seed>(k));
        }
        i_ = start;
        throw Error(Errc::unknown_identifier, "unknown identifier '" + id + "' at column " +
                                                  std::to_string(start + 1) + " in \"" + s_ + "\"");
    }

    const std::string& s_;
    const ParseOptions& o_;
    std::size_t i_ = 0;
};

}  // namespace

ScalarField parse_field(const std::string& text, const ParseOptions& opts) {
    Parser p(text, opts);
    return p.parse();
}

}  // namespace forge
