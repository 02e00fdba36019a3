#include "rbsde/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

namespace rbsde {

namespace {

struct Token {
    enum class Type { number, identifier, op, lparen, rparen, comma, end };
    Type type;
    double number = 0.0;
    std::string text;
    std::size_t pos = 0;  // 1-based column
};

class Lexer {
  public:
    explicit Lexer(const std::string& text) : text_(text) { advance(); }

    const Token& peek() const { return current_; }

    Token take() {
        Token t = current_;
        advance();
        return t;
    }

  private:
    void advance() {
        while (i_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[i_]))) ++i_;
        current_.pos = i_ + 1;
        if (i_ >= text_.size()) {
            current_.type = Token::Type::end;
            current_.text = "<end>";
            return;
        }
        const char c = text_[i_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            try {
                current_.number = std::stod(text_.substr(i_), &used);
            } catch (const std::exception&) {
                throw Error(ErrorKind::parse,
                            "syntax error at column " + std::to_string(i_ + 1) + ": bad number");
            }
            current_.type = Token::Type::number;
            current_.text = text_.substr(i_, used);
            i_ += used;
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i_;
            while (j < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[j])) || text_[j] == '_'))
                ++j;
            current_.type = Token::Type::identifier;
            current_.text = text_.substr(i_, j - i_);
            i_ = j;
            return;
        }
        switch (c) {
            case '+':
            case '-':
            case '*':
            case '/':
            case '^':
                current_.type = Token::Type::op;
                current_.text = std::string(1, c);
                break;
            case '(':
                current_.type = Token::Type::lparen;
                current_.text = "(";
                break;
            case ')':
                current_.type = Token::Type::rparen;
                current_.text = ")";
                break;
            case ',':
                current_.type = Token::Type::comma;
                current_.text = ",";
                break;
            default:
                throw Error(ErrorKind::parse, "syntax error at column " + std::to_string(i_ + 1) +
                                                  ": unexpected character '" + std::string(1, c) + "'");
        }
        ++i_;
    }

    std::string text_;
    std::size_t i_ = 0;
    Token current_;
};

ExprPtr make_number(double v) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::number;
    e->value = v;
    return e;
}

ExprPtr make_node(Expr::Kind kind, std::vector<ExprPtr> args, std::string name = {}) {
    auto e = std::make_shared<Expr>();
    e->kind = kind;
    e->name = std::move(name);
    e->args = std::move(args);
    return e;
}

int call_arity(const std::string& name) {
    if (name == "abs" || name == "exp" || name == "sq" || name == "tanh") return 1;
    if (name == "min" || name == "max") return 2;
    return -1;
}

class Parser {
  public:
    explicit Parser(const std::string& text) : lex_(text) {}

    ExprPtr parse() {
        ExprPtr e = parse_sum();
        const Token& t = lex_.peek();
        if (t.type != Token::Type::end)
            throw Error(ErrorKind::parse, "syntax error at column " + std::to_string(t.pos) +
                                              ": unexpected '" + t.text + "'");
        return e;
    }

  private:
    [[noreturn]] void fail(const Token& t, const std::string& what) {
        throw Error(ErrorKind::parse,
                    "syntax error at column " + std::to_string(t.pos) + ": " + what);
    }

    ExprPtr parse_sum() {
        ExprPtr left = parse_product();
        while (lex_.peek().type == Token::Type::op &&
               (lex_.peek().text == "+" || lex_.peek().text == "-")) {
            const Token op = lex_.take();
            ExprPtr right = parse_product();
            left = make_node(op.text == "+" ? Expr::Kind::add : Expr::Kind::sub, {left, right});
        }
        return left;
    }

    ExprPtr parse_product() {
        ExprPtr left = parse_power();
        while (lex_.peek().type == Token::Type::op &&
               (lex_.peek().text == "*" || lex_.peek().text == "/")) {
            const Token op = lex_.take();
            ExprPtr right = parse_power();
            left = make_node(op.text == "*" ? Expr::Kind::mul : Expr::Kind::div, {left, right});
        }
        return left;
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_unary();
        if (lex_.peek().type == Token::Type::op && lex_.peek().text == "^") {
            lex_.take();
            ExprPtr exponent = parse_power();  // right associative
            return make_node(Expr::Kind::pow, {base, exponent});
        }
        return base;
    }

    ExprPtr parse_unary() {
        const Token& t = lex_.peek();
        if (t.type == Token::Type::op && t.text == "-") {
            lex_.take();
            return make_node(Expr::Kind::unary_minus, {parse_unary()});
        }
        return parse_primary();
    }

    ExprPtr parse_primary() {
        Token t = lex_.take();
        switch (t.type) {
            case Token::Type::number:
                return make_number(t.number);
            case Token::Type::identifier: {
                if (lex_.peek().type == Token::Type::lparen) {
                    const int arity = call_arity(t.text);
                    if (arity < 0) fail(t, "unknown function '" + t.text + "'");
                    lex_.take();
                    std::vector<ExprPtr> args;
                    args.push_back(parse_sum());
                    while (lex_.peek().type == Token::Type::comma) {
                        lex_.take();
                        args.push_back(parse_sum());
                    }
                    Token close = lex_.take();
                    if (close.type != Token::Type::rparen) fail(close, "expected ')'");
                    if (static_cast<int>(args.size()) != arity)
                        fail(t, "'" + t.text + "' expects " + std::to_string(arity) + " argument(s)");
                    return make_node(Expr::Kind::call, std::move(args), t.text);
                }
                return make_node(Expr::Kind::identifier, {}, t.text);
            }
            case Token::Type::lparen: {
                ExprPtr inner = parse_sum();
                Token close = lex_.take();
                if (close.type != Token::Type::rparen) fail(close, "expected ')'");
                return inner;
            }
            default:
                fail(t, "expected a value");
        }
    }

    Lexer lex_;
};

int precedence(Expr::Kind k) {
    switch (k) {
        case Expr::Kind::add:
        case Expr::Kind::sub: return 1;
        case Expr::Kind::mul:
        case Expr::Kind::div: return 2;
        case Expr::Kind::unary_minus: return 3;
        case Expr::Kind::pow: return 4;
        default: return 5;
    }
}

void print_rec(const ExprPtr& e, std::ostringstream& out, int parent_prec) {
    const int prec = precedence(e->kind);
    const bool parens = prec < parent_prec;
    if (parens) out << '(';
    switch (e->kind) {
        case Expr::Kind::number: {
            std::ostringstream num;
            num.precision(17);
            num << e->value;
            out << num.str();
            break;
        }
        case Expr::Kind::identifier:
            out << e->name;
            break;
        case Expr::Kind::unary_minus:
            out << '-';
            print_rec(e->args[0], out, prec + 1);
            break;
        case Expr::Kind::add:
        case Expr::Kind::sub:
        case Expr::Kind::mul:
        case Expr::Kind::div: {
            const char* op = e->kind == Expr::Kind::add   ? " + "
                             : e->kind == Expr::Kind::sub ? " - "
                             : e->kind == Expr::Kind::mul ? "*"
                                                          : "/";
            print_rec(e->args[0], out, prec);
            out << op;
            // Right operand of - and / needs a strictly tighter context.
            print_rec(e->args[1], out, prec + 1);
            break;
        }
        case Expr::Kind::pow:
            print_rec(e->args[0], out, prec + 1);
            out << '^';
            print_rec(e->args[1], out, prec);
            break;
        case Expr::Kind::call:
            out << e->name << '(';
            for (std::size_t i = 0; i < e->args.size(); ++i) {
                if (i) out << ", ";
                print_rec(e->args[i], out, 0);
            }
            out << ')';
            break;
    }
    if (parens) out << ')';
}

void collect_identifiers(const ExprPtr& e, std::set<std::string>& out) {
    if (e->kind == Expr::Kind::identifier) out.insert(e->name);
    for (const auto& a : e->args) collect_identifiers(a, out);
}

}  // namespace

ExprPtr parse_expr(const std::string& text) { return Parser(text).parse(); }

std::string print_expr(const ExprPtr& e) {
    std::ostringstream out;
    print_rec(e, out, 0);
    return out.str();
}

double eval_expr(const ExprPtr& e, const Bindings& bind) {
    switch (e->kind) {
        case Expr::Kind::number: return e->value;
        case Expr::Kind::identifier: return bind(e->name);
        case Expr::Kind::unary_minus: return -eval_expr(e->args[0], bind);
        case Expr::Kind::add: return eval_expr(e->args[0], bind) + eval_expr(e->args[1], bind);
        case Expr::Kind::sub: return eval_expr(e->args[0], bind) - eval_expr(e->args[1], bind);
        case Expr::Kind::mul: return eval_expr(e->args[0], bind) * eval_expr(e->args[1], bind);
        case Expr::Kind::div: {
            const double denom = eval_expr(e->args[1], bind);
            if (denom == 0.0) throw Error(ErrorKind::domain, "expression error: division by zero");
            return eval_expr(e->args[0], bind) / denom;
        }
        case Expr::Kind::pow: return std::pow(eval_expr(e->args[0], bind), eval_expr(e->args[1], bind));
        case Expr::Kind::call: {
            const double a = eval_expr(e->args[0], bind);
            if (e->name == "abs") return std::abs(a);
            if (e->name == "exp") return std::exp(a);
            if (e->name == "sq") return a * a;
            if (e->name == "tanh") return std::tanh(a);
            const double b = eval_expr(e->args[1], bind);
            if (e->name == "min") return std::min(a, b);
            return std::max(a, b);
        }
    }
    throw Error(ErrorKind::parse, "expression error: malformed AST");
}

std::vector<std::string> free_identifiers(const ExprPtr& e) {
    std::set<std::string> names;
    collect_identifiers(e, names);
    return {names.begin(), names.end()};
}

}  // namespace rbsde
