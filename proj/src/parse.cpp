#include "forcedmech/parse.hpp"

#include "forcedmech/errors.hpp"

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <utility>
#include <vector>

namespace fm {

void SymbolTable::add(const std::string& name, Expr value) {
    if (!entries_.emplace(name, std::move(value)).second)
        throw PreconditionError("duplicate symbol '" + name + "'");
}

const Expr& SymbolTable::at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw PreconditionError("unknown symbol '" + name + "'");
    return it->second;
}

bool is_reserved_word(const std::string& name) {
    static const char* words[] = {"sin", "cos", "exp", "log", "sqrt", "abs", "norm", "quad01"};
    for (const char* w : words)
        if (name == w) return true;
    return false;
}

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
    Tok kind;
    std::string text; // identifier spelling
    Rational value;   // number payload
    int column;       // 1-based position in the input text
};

class Lexer {
  public:
    Lexer(const std::string& text, int line, int column_offset)
        : text_(text), line_(line), offset_(column_offset) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        std::size_t i = 0;
        while (i < text_.size()) {
            char c = text_[i];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++i;
                continue;
            }
            int col = static_cast<int>(i) + 1;
            if (std::isdigit(static_cast<unsigned char>(c)) ||
                (c == '.' && i + 1 < text_.size() &&
                 std::isdigit(static_cast<unsigned char>(text_[i + 1])))) {
                out.push_back(lex_number(i));
                continue;
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t start = i;
                while (i < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[i])) ||
                                            text_[i] == '_'))
                    ++i;
                out.push_back({Tok::Ident, text_.substr(start, i - start), Rational(0), col});
                continue;
            }
            Tok kind;
            switch (c) {
            case '+': kind = Tok::Plus; break;
            case '-': kind = Tok::Minus; break;
            case '*': kind = Tok::Star; break;
            case '/': kind = Tok::Slash; break;
            case '^': kind = Tok::Caret; break;
            case '(': kind = Tok::LParen; break;
            case ')': kind = Tok::RParen; break;
            case ',': kind = Tok::Comma; break;
            default:
                throw ParseError(std::string("unexpected character '") + c + "'", line_,
                                 offset_ + col);
            }
            out.push_back({kind, std::string(1, c), Rational(0), col});
            ++i;
        }
        out.push_back({Tok::End, "", Rational(0), static_cast<int>(text_.size()) + 1});
        return out;
    }

  private:
    Token lex_number(std::size_t& i) {
        int col = static_cast<int>(i) + 1;
        std::string digits;
        long frac = 0, expo = 0;
        while (i < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i])))
            digits += text_[i++];
        if (i < text_.size() && text_[i] == '.') {
            ++i;
            while (i < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i]))) {
                digits += text_[i++];
                ++frac;
            }
        }
        if (i < text_.size() && (text_[i] == 'e' || text_[i] == 'E')) {
            std::size_t mark = i++;
            bool neg = false;
            if (i < text_.size() && (text_[i] == '+' || text_[i] == '-')) neg = text_[i++] == '-';
            if (i >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[i]))) {
                // Not an exponent after all (e.g. "2e" before an identifier).
                i = mark;
            } else {
                std::string es;
                while (i < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i])))
                    es += text_[i++];
                if (es.size() > 5)
                    throw ParseError("numeric exponent out of range", line_, offset_ + col);
                expo = std::strtol(es.c_str(), nullptr, 10);
                if (neg) expo = -expo;
            }
        }
        // cpp_int's string constructor treats a leading 0 as an octal prefix.
        std::size_t nz = digits.find_first_not_of('0');
        digits = nz == std::string::npos ? "0" : digits.substr(nz);
        Rational value{BigInt(digits)};
        long shift = expo - frac;
        if (shift > 100000 || shift < -100000)
            throw ParseError("numeric exponent out of range", line_, offset_ + col);
        if (shift > 0)
            value *= Rational(boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(shift)));
        else if (shift < 0)
            value /= Rational(boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(-shift)));
        return {Tok::Number, "", value, col};
    }

    const std::string& text_;
    int line_;
    int offset_;
};

class Parser {
  public:
    Parser(std::vector<Token> tokens, const SymbolTable& symbols, int line, int column_offset)
        : toks_(std::move(tokens)), symbols_(symbols), line_(line), offset_(column_offset) {}

    Expr run() {
        Expr e = parse_sum();
        if (peek().kind != Tok::End) fail("unexpected trailing input", peek().column);
        return e;
    }

  private:
    [[noreturn]] void fail(const std::string& msg, int column) const {
        throw ParseError(msg, line_, offset_ + column);
    }

    const Token& peek() const { return toks_[pos_]; }

    bool eat(Tok kind) {
        if (toks_[pos_].kind != kind) return false;
        ++pos_;
        return true;
    }

    void expect(Tok kind, const std::string& what) {
        if (!eat(kind)) fail("expected " + what, peek().column);
    }

    Expr parse_sum() {
        Expr acc = parse_product();
        for (;;) {
            if (eat(Tok::Plus))
                acc = acc + parse_product();
            else if (eat(Tok::Minus))
                acc = acc - parse_product();
            else
                return acc;
        }
    }

    Expr parse_product() {
        Expr acc = parse_unary();
        for (;;) {
            if (eat(Tok::Star)) {
                acc = acc * parse_unary();
            } else if (peek().kind == Tok::Slash) {
                int col = peek().column;
                ++pos_;
                Expr rhs = parse_unary();
                if (rhs.is_constant() && rhs.constant_value() == 0)
                    fail("division by zero", col);
                acc = acc / rhs;
            } else {
                return acc;
            }
        }
    }

    Expr parse_unary() {
        if (eat(Tok::Plus)) return parse_unary();
        if (eat(Tok::Minus)) return -parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_atom();
        if (peek().kind != Tok::Caret) return base;
        int col = peek().column;
        ++pos_;
        Expr raw = parse_unary(); // right-associative; signs allowed
        Expr ex = simplify(raw);
        if (!ex.is_constant()) fail("exponent must be a rational constant", col);
        try {
            return pow(base, ex.constant_value());
        } catch (const Error& e) {
            fail(e.what(), col);
        }
    }

    Expr parse_atom() {
        const Token& tok = peek();
        switch (tok.kind) {
        case Tok::Number: {
            ++pos_;
            return Expr::constant(tok.value);
        }
        case Tok::Ident: {
            ++pos_;
            if (peek().kind == Tok::LParen) return parse_call(tok);
            return lookup(tok);
        }
        case Tok::LParen: {
            ++pos_;
            Expr e = parse_sum();
            expect(Tok::RParen, "')'");
            return e;
        }
        default: fail("expected an expression", tok.column);
        }
    }

    Expr lookup(const Token& tok) const {
        for (auto it = locals_.rbegin(); it != locals_.rend(); ++it)
            if (it->first == tok.text) return it->second;
        if (symbols_.contains(tok.text)) return symbols_.at(tok.text);
        if (is_reserved_word(tok.text))
            fail("'" + tok.text + "' is a function name and needs arguments", tok.column);
        fail("undeclared symbol '" + tok.text + "'", tok.column);
    }

    Expr parse_call(const Token& name) {
        expect(Tok::LParen, "'('");
        if (name.text == "quad01") return parse_quadrature(name);
        std::vector<Expr> args;
        if (peek().kind != Tok::RParen) {
            args.push_back(parse_sum());
            while (eat(Tok::Comma)) args.push_back(parse_sum());
        }
        expect(Tok::RParen, "')'");
        try {
            if (name.text == "norm") {
                if (args.empty()) fail("norm needs at least one argument", name.column);
                Expr sum = Expr::constant(0);
                for (const Expr& a : args) sum = sum + pow(a, 2);
                return sqrt(sum);
            }
            if (args.size() != 1)
                fail("'" + name.text + "' takes exactly one argument", name.column);
            if (name.text == "sin") return sin(args[0]);
            if (name.text == "cos") return cos(args[0]);
            if (name.text == "exp") return exp(args[0]);
            if (name.text == "log") return log(args[0]);
            if (name.text == "sqrt") return sqrt(args[0]);
            if (name.text == "abs") return abs(args[0]);
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            fail(e.what(), name.column);
        }
        fail("unknown function '" + name.text + "'", name.column);
    }

    Expr parse_quadrature(const Token& name) {
        const Token var = peek();
        if (var.kind != Tok::Ident) fail("quad01 needs a fresh variable name first", var.column);
        ++pos_;
        if (is_reserved_word(var.text))
            fail("'" + var.text + "' is reserved and cannot name a quadrature variable", var.column);
        if (symbols_.contains(var.text))
            fail("quadrature variable '" + var.text + "' shadows a declared symbol", var.column);
        for (const auto& local : locals_)
            if (local.first == var.text)
                fail("quadrature variable '" + var.text + "' shadows a declared symbol", var.column);
        expect(Tok::Comma, "','");
        Expr var_sym = Expr::symbol(var.text, SymbolKind::Parameter);
        locals_.emplace_back(var.text, var_sym);
        Expr body = parse_sum();
        locals_.pop_back();
        expect(Tok::RParen, "')'");
        try {
            return quadrature01(body, var_sym);
        } catch (const Error& e) {
            fail(e.what(), name.column);
        }
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    const SymbolTable& symbols_;
    std::vector<std::pair<std::string, Expr>> locals_;
    int line_;
    int offset_;
};

} // namespace

Expr parse_expression(const std::string& text, const SymbolTable& symbols, int line,
                      int column_offset) {
    Lexer lexer(text, line, column_offset);
    Parser parser(lexer.run(), symbols, line, column_offset);
    return parser.run();
}

} // namespace fm
