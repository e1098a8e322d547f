#include "spraymet/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

namespace spraymet {

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

ScalarFieldExpr ScalarFieldExpr::number(int dimension, double value) {
    ScalarFieldExpr e(dimension);
    Node n;
    n.kind = Kind::Number;
    n.number = value;
    e.root_ = e.add_node(n);
    return e;
}

ScalarFieldExpr ScalarFieldExpr::base_coordinate(int dimension, int i) {
    if (i < 0 || i >= dimension)
        throw ConfigError("base coordinate index out of range");
    ScalarFieldExpr e(dimension);
    Node n;
    n.kind = Kind::Symbol;
    n.symbol = i;
    e.root_ = e.add_node(n);
    return e;
}

ScalarFieldExpr ScalarFieldExpr::fiber_coordinate(int dimension, int i) {
    if (i < 0 || i >= dimension)
        throw ConfigError("fiber coordinate index out of range");
    ScalarFieldExpr e(dimension);
    Node n;
    n.kind = Kind::Symbol;
    n.symbol = dimension + i;
    e.root_ = e.add_node(n);
    return e;
}

int ScalarFieldExpr::add_node(Node node) {
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
}

int ScalarFieldExpr::graft(const ScalarFieldExpr& other) {
    int offset = static_cast<int>(nodes_.size());
    for (Node n : other.nodes_) {
        if (n.lhs >= 0)
            n.lhs += offset;
        if (n.rhs >= 0)
            n.rhs += offset;
        nodes_.push_back(n);
    }
    return other.root_ + offset;
}

ScalarFieldExpr ScalarFieldExpr::combine(Kind kind, const ScalarFieldExpr& l, const ScalarFieldExpr& r) {
    if (l.dimension() != r.dimension())
        throw ConfigError("combining expressions of different dimensions");
    ScalarFieldExpr e(l.dimension());
    Node n;
    n.kind = kind;
    n.lhs = e.graft(l);
    n.rhs = e.graft(r);
    e.root_ = e.add_node(n);
    return e;
}

ScalarFieldExpr operator+(const ScalarFieldExpr& l, const ScalarFieldExpr& r) {
    return ScalarFieldExpr::combine(ScalarFieldExpr::Kind::Add, l, r);
}

ScalarFieldExpr operator-(const ScalarFieldExpr& l, const ScalarFieldExpr& r) {
    return ScalarFieldExpr::combine(ScalarFieldExpr::Kind::Sub, l, r);
}

ScalarFieldExpr operator*(const ScalarFieldExpr& l, const ScalarFieldExpr& r) {
    return ScalarFieldExpr::combine(ScalarFieldExpr::Kind::Mul, l, r);
}

ScalarFieldExpr operator/(const ScalarFieldExpr& l, const ScalarFieldExpr& r) {
    return ScalarFieldExpr::combine(ScalarFieldExpr::Kind::Div, l, r);
}

ScalarFieldExpr operator-(const ScalarFieldExpr& e) {
    ScalarFieldExpr out(e.dimension());
    ScalarFieldExpr::Node n;
    n.kind = ScalarFieldExpr::Kind::Neg;
    n.lhs = out.graft(e);
    out.root_ = out.add_node(n);
    return out;
}

ScalarFieldExpr ScalarFieldExpr::apply(ExprFunc fn, const ScalarFieldExpr& arg) {
    ScalarFieldExpr out(arg.dimension());
    Node n;
    n.kind = Kind::Call;
    n.fn = fn;
    n.lhs = out.graft(arg);
    out.root_ = out.add_node(n);
    return out;
}

ScalarFieldExpr ScalarFieldExpr::pow_const(const ScalarFieldExpr& base, double exponent) {
    ScalarFieldExpr out(base.dimension());
    Node n;
    n.kind = Kind::Pow;
    n.number = exponent;
    n.lhs = out.graft(base);
    out.root_ = out.add_node(n);
    return out;
}

ScalarFieldExpr ScalarFieldExpr::scaled(double factor, const ScalarFieldExpr& e) {
    return number(e.dimension(), factor) * e;
}

bool ScalarFieldExpr::uses_base_coordinates() const noexcept {
    return std::any_of(nodes_.begin(), nodes_.end(), [&](const Node& n) {
        return n.kind == Kind::Symbol && n.symbol < dimension();
    });
}

bool ScalarFieldExpr::uses_fiber_coordinates() const noexcept {
    return std::any_of(nodes_.begin(), nodes_.end(), [&](const Node& n) {
        return n.kind == Kind::Symbol && n.symbol >= dimension();
    });
}

template <class T>
T ScalarFieldExpr::eval_node(int node, std::span<const T> coords) const {
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    switch (n.kind) {
    case Kind::Number:
        return T(n.number);
    case Kind::Symbol:
        return coords[static_cast<std::size_t>(n.symbol)];
    case Kind::Add:
        return eval_node<T>(n.lhs, coords) + eval_node<T>(n.rhs, coords);
    case Kind::Sub:
        return eval_node<T>(n.lhs, coords) - eval_node<T>(n.rhs, coords);
    case Kind::Mul:
        return eval_node<T>(n.lhs, coords) * eval_node<T>(n.rhs, coords);
    case Kind::Div: {
        T num = eval_node<T>(n.lhs, coords);
        T den = eval_node<T>(n.rhs, coords);
        if (real_part(den) == 0.0)
            throw DomainError("division by zero");
        return num / den;
    }
    case Kind::Neg:
        return -eval_node<T>(n.lhs, coords);
    case Kind::Pow:
        return pow(eval_node<T>(n.lhs, coords), n.number);
    case Kind::Call:
        switch (n.fn) {
        case ExprFunc::Sqrt:
            return sqrt(eval_node<T>(n.lhs, coords));
        case ExprFunc::Exp:
            return exp(eval_node<T>(n.lhs, coords));
        case ExprFunc::Log:
            return log(eval_node<T>(n.lhs, coords));
        case ExprFunc::Sin:
            return sin(eval_node<T>(n.lhs, coords));
        case ExprFunc::Cos:
            return cos(eval_node<T>(n.lhs, coords));
        }
        break;
    }
    throw Error("corrupt expression node");
}

template <class T>
T ScalarFieldExpr::eval(std::span<const T> coords) const {
    return eval_node<T>(root_, coords);
}

template double ScalarFieldExpr::eval<double>(std::span<const double>) const;
template Dual1 ScalarFieldExpr::eval<Dual1>(std::span<const Dual1>) const;
template Dual2 ScalarFieldExpr::eval<Dual2>(std::span<const Dual2>) const;
template Dual3 ScalarFieldExpr::eval<Dual3>(std::span<const Dual3>) const;

namespace {

const char* func_name(ExprFunc fn) {
    switch (fn) {
    case ExprFunc::Sqrt:
        return "sqrt";
    case ExprFunc::Exp:
        return "exp";
    case ExprFunc::Log:
        return "log";
    case ExprFunc::Sin:
        return "sin";
    case ExprFunc::Cos:
        return "cos";
    }
    return "?";
}

} // namespace

void ScalarFieldExpr::print_node(int node, int parent_precedence, std::string& out) const {
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    auto binary = [&](int prec, char op) {
        bool parens = prec < parent_precedence;
        if (parens)
            out += '(';
        print_node(n.lhs, prec, out);
        out += op;
        print_node(n.rhs, prec + 1, out); // left-assoc: parenthesize equal precedence on the right
        if (parens)
            out += ')';
    };
    switch (n.kind) {
    case Kind::Number: {
        bool parens = std::signbit(n.number) && parent_precedence > 1;
        if (parens)
            out += '(';
        out += format_double(n.number);
        if (parens)
            out += ')';
        break;
    }
    case Kind::Symbol:
        out += (n.symbol < dimension()) ? 'x' : 'y';
        out += std::to_string(n.symbol < dimension() ? n.symbol + 1 : n.symbol - dimension() + 1);
        break;
    case Kind::Add:
        binary(1, '+');
        break;
    case Kind::Sub:
        binary(1, '-');
        break;
    case Kind::Mul:
        binary(2, '*');
        break;
    case Kind::Div:
        binary(2, '/');
        break;
    case Kind::Neg: {
        bool parens = 3 < parent_precedence;
        if (parens)
            out += '(';
        out += '-';
        print_node(n.lhs, 4, out); // operands below '^' precedence get parenthesized
        if (parens)
            out += ')';
        break;
    }
    case Kind::Pow: {
        bool parens = 4 < parent_precedence;
        if (parens)
            out += '(';
        print_node(n.lhs, 5, out); // only primaries survive unparenthesized as a base
        out += '^';
        out += format_double(n.number);
        if (parens)
            out += ')';
        break;
    }
    case Kind::Call:
        out += func_name(n.fn);
        out += '(';
        print_node(n.lhs, 0, out);
        out += ')';
        break;
    }
}

std::string ScalarFieldExpr::to_string() const {
    std::string out;
    print_node(root_, 0, out);
    return out;
}

std::string ScalarFieldExpr::describe() const {
    std::string s = to_string();
    if (s.size() > 60)
        s = s.substr(0, 57) + "...";
    return "expression '" + s + "'";
}

namespace {

enum class TokKind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
    TokKind kind;
    std::size_t pos;
    std::string_view text;
    double number = 0.0;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
        if (pos_ >= src_.size())
            return {TokKind::End, src_.size(), {}};
        std::size_t start = pos_;
        char c = src_[pos_];
        switch (c) {
        case '+':
            ++pos_;
            return {TokKind::Plus, start, src_.substr(start, 1)};
        case '-':
            ++pos_;
            return {TokKind::Minus, start, src_.substr(start, 1)};
        case '*':
            ++pos_;
            return {TokKind::Star, start, src_.substr(start, 1)};
        case '/':
            ++pos_;
            return {TokKind::Slash, start, src_.substr(start, 1)};
        case '^':
            ++pos_;
            return {TokKind::Caret, start, src_.substr(start, 1)};
        case '(':
            ++pos_;
            return {TokKind::LParen, start, src_.substr(start, 1)};
        case ')':
            ++pos_;
            return {TokKind::RParen, start, src_.substr(start, 1)};
        default:
            break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return lex_number(start);
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            return {TokKind::Ident, start, src_.substr(start, pos_ - start)};
        }
        throw ParseError("unexpected character '" + std::string(1, c) + "' at position " + std::to_string(start),
                         start);
    }

private:
    Token lex_number(std::size_t start) {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
                ++pos_;
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                    ++pos_;
            } else {
                pos_ = mark; // 'e' begins an identifier, not an exponent
            }
        }
        std::string_view text = src_.substr(start, pos_ - start);
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc{} || ptr != text.data() + text.size())
            throw ParseError("invalid number '" + std::string(text) + "' at position " + std::to_string(start),
                             start);
        return {TokKind::Number, start, text, value};
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

} // namespace

class ExprParser {
public:
    ExprParser(std::string_view src, int dimension)
        : lexer_(src), expr_(ScalarFieldExpr(dimension)), dim_(dimension) {
        advance();
    }

    ScalarFieldExpr run() {
        expr_.root_ = parse_expr();
        if (tok_.kind != TokKind::End)
            throw ParseError("unexpected '" + std::string(tok_.text) + "' at position " + std::to_string(tok_.pos),
                             tok_.pos);
        return std::move(expr_);
    }

private:
    using Kind = ScalarFieldExpr::Kind;
    using Node = ScalarFieldExpr::Node;

    void advance() { tok_ = lexer_.next(); }

    [[noreturn]] void fail_expected(const std::string& expected) {
        std::string got = tok_.kind == TokKind::End ? "end of input" : "'" + std::string(tok_.text) + "'";
        throw ParseError("unexpected " + got + " at position " + std::to_string(tok_.pos) + "; expected " + expected,
                         tok_.pos);
    }

    int parse_expr() {
        int lhs = parse_term();
        while (tok_.kind == TokKind::Plus || tok_.kind == TokKind::Minus) {
            Kind kind = tok_.kind == TokKind::Plus ? Kind::Add : Kind::Sub;
            advance();
            int rhs = parse_term();
            Node n;
            n.kind = kind;
            n.lhs = lhs;
            n.rhs = rhs;
            lhs = expr_.add_node(n);
        }
        return lhs;
    }

    int parse_term() {
        int lhs = parse_unary();
        while (tok_.kind == TokKind::Star || tok_.kind == TokKind::Slash) {
            Kind kind = tok_.kind == TokKind::Star ? Kind::Mul : Kind::Div;
            advance();
            int rhs = parse_unary();
            Node n;
            n.kind = kind;
            n.lhs = lhs;
            n.rhs = rhs;
            lhs = expr_.add_node(n);
        }
        return lhs;
    }

    int parse_unary() {
        if (tok_.kind == TokKind::Minus) {
            advance();
            Node n;
            n.kind = Kind::Neg;
            n.lhs = parse_unary();
            return expr_.add_node(n);
        }
        if (tok_.kind == TokKind::Plus) {
            advance();
            return parse_unary();
        }
        return parse_power();
    }

    int parse_power() {
        int base = parse_primary();
        if (tok_.kind != TokKind::Caret)
            return base;
        std::size_t caret_pos = tok_.pos;
        advance();
        int exponent = parse_unary();
        Node n;
        n.kind = Kind::Pow;
        n.lhs = base;
        n.number = fold_constant(exponent, caret_pos);
        return expr_.add_node(n);
    }

    double fold_constant(int node, std::size_t caret_pos) {
        if (!subtree_constant(node))
            throw ParseError("exponent after position " + std::to_string(caret_pos) +
                                 " must be a constant expression",
                             caret_pos);
        std::vector<double> dummy(static_cast<std::size_t>(2 * dim_), 0.0);
        try {
            return expr_.eval_node<double>(node, dummy);
        } catch (const DomainError& e) {
            throw ParseError("invalid constant exponent near position " + std::to_string(caret_pos) + ": " +
                                 e.what(),
                             caret_pos);
        }
    }

    bool subtree_constant(int node) const {
        const Node& n = expr_.nodes_[static_cast<std::size_t>(node)];
        if (n.kind == Kind::Symbol)
            return false;
        if (n.lhs >= 0 && !subtree_constant(n.lhs))
            return false;
        if (n.rhs >= 0 && !subtree_constant(n.rhs))
            return false;
        return true;
    }

    int parse_primary() {
        switch (tok_.kind) {
        case TokKind::Number: {
            Node n;
            n.kind = Kind::Number;
            n.number = tok_.number;
            advance();
            return expr_.add_node(n);
        }
        case TokKind::Ident:
            return parse_ident();
        case TokKind::LParen: {
            advance();
            int inner = parse_expr();
            if (tok_.kind != TokKind::RParen)
                fail_expected("')'");
            advance();
            return inner;
        }
        default:
            fail_expected("a number, coordinate, function or '('");
        }
    }

    int parse_ident() {
        Token ident = tok_;
        advance();
        if (tok_.kind == TokKind::LParen)
            return parse_call(ident);
        int slot = coordinate_slot(ident);
        Node n;
        n.kind = Kind::Symbol;
        n.symbol = slot;
        return expr_.add_node(n);
    }

    int parse_call(const Token& ident) {
        ExprFunc fn;
        if (ident.text == "sqrt")
            fn = ExprFunc::Sqrt;
        else if (ident.text == "exp")
            fn = ExprFunc::Exp;
        else if (ident.text == "log")
            fn = ExprFunc::Log;
        else if (ident.text == "sin")
            fn = ExprFunc::Sin;
        else if (ident.text == "cos")
            fn = ExprFunc::Cos;
        else
            throw ParseError("unknown function '" + std::string(ident.text) + "' at position " +
                                 std::to_string(ident.pos) + "; known functions: cos, exp, log, sin, sqrt",
                             ident.pos);
        advance(); // past '('
        int arg = parse_expr();
        if (tok_.kind != TokKind::RParen)
            fail_expected("')'");
        advance();
        Node n;
        n.kind = Kind::Call;
        n.fn = fn;
        n.lhs = arg;
        return expr_.add_node(n);
    }

    int coordinate_slot(const Token& ident) {
        std::string_view name = ident.text;
        if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'y')) {
            bool digits = true;
            for (std::size_t i = 1; i < name.size(); ++i)
                digits = digits && std::isdigit(static_cast<unsigned char>(name[i]));
            if (digits) {
                int k = std::atoi(std::string(name.substr(1)).c_str());
                if (k < 1 || k > dim_)
                    throw ParseError("coordinate '" + std::string(name) + "' at position " +
                                         std::to_string(ident.pos) + " is out of range for dimension " +
                                         std::to_string(dim_),
                                     ident.pos);
                return (name[0] == 'x') ? k - 1 : dim_ + k - 1;
            }
        }
        throw ParseError("unknown symbol '" + std::string(name) + "' at position " + std::to_string(ident.pos),
                         ident.pos);
    }

    Lexer lexer_;
    Token tok_{TokKind::End, 0, {}};
    ScalarFieldExpr expr_;
    int dim_;
};

ScalarFieldExpr parse_expression(std::string_view source, int dimension) {
    ExprParser parser(source, dimension);
    return parser.run();
}

} // namespace spraymet
