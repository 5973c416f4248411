#include <charconv>
#include <cctype>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include <fmt/format.h>

#include "xsalpha/errors.hpp"
#include "xsalpha/feature_dsl.hpp"

namespace xsa::fx {

ParseError::ParseError(const std::string& message, std::size_t line, std::size_t column)
    : std::runtime_error(fmt::format("{}:{}: {}", line, column, message)), line_(line), column_(column) {}

namespace {

enum class Tok { ident, number, string, lparen, rparen, comma, equals, plus, minus, star, slash, end };

struct Token {
    Tok kind;
    std::string text;
    double number = 0.0;
    std::size_t line = 1;
    std::size_t column = 1;
};

std::string_view describe(Tok t) {
    switch (t) {
    case Tok::ident: return "identifier";
    case Tok::number: return "number";
    case Tok::string: return "string";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::comma: return "','";
    case Tok::equals: return "'='";
    case Tok::plus: return "'+'";
    case Tok::minus: return "'-'";
    case Tok::star: return "'*'";
    case Tok::slash: return "'/'";
    case Tok::end: return "end of input";
    }
    return "?";
}

class Lexer {
  public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token t{Tok::end, {}, 0.0, line_, col_};
            if (pos_ >= src_.size()) {
                out.push_back(t);
                return out;
            }
            const char c = src_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                const std::size_t start = pos_;
                while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                              src_[pos_] == '_' || src_[pos_] == '.'))
                    advance();
                t.kind = Tok::ident;
                t.text = std::string(src_.substr(start, pos_ - start));
            } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                t.kind = Tok::number;
                lex_number(t);
            } else if (c == '"') {
                t.kind = Tok::string;
                lex_string(t);
            } else {
                switch (c) {
                case '(': t.kind = Tok::lparen; break;
                case ')': t.kind = Tok::rparen; break;
                case ',': t.kind = Tok::comma; break;
                case '=': t.kind = Tok::equals; break;
                case '+': t.kind = Tok::plus; break;
                case '-': t.kind = Tok::minus; break;
                case '*': t.kind = Tok::star; break;
                case '/': t.kind = Tok::slash; break;
                default: throw ParseError(fmt::format("unexpected character '{}'", c), line_, col_);
                }
                advance();
            }
            out.push_back(std::move(t));
        }
    }

  private:
    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
    }

    void lex_number(Token& t) {
        const std::size_t start = pos_;
        auto digits = [&] {
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
        };
        digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            advance();
            digits();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            advance();
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
            digits();
        }
        t.text = std::string(src_.substr(start, pos_ - start));
        const auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
        if (ec != std::errc{} || ptr != t.text.data() + t.text.size())
            throw ParseError(fmt::format("malformed number '{}'", t.text), t.line, t.column);
    }

    void lex_string(Token& t) {
        advance();
        while (pos_ < src_.size() && src_[pos_] != '"') {
            if (src_[pos_] == '\\' && pos_ + 1 < src_.size()) advance();
            t.text.push_back(src_[pos_]);
            advance();
        }
        if (pos_ >= src_.size()) throw ParseError("unterminated string", t.line, t.column);
        advance();
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

enum class ParamKind { expr, integer, real };

struct Param {
    std::string_view name;
    ParamKind kind;
    bool required;
};

struct Argument {
    ExprPtr expr;
    Token at;
};

class Parser {
  public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    ExprPtr parse_all() {
        auto e = parse_expr();
        if (peek().kind != Tok::end)
            fail(fmt::format("unexpected {} after complete expression", describe(peek().kind)), peek());
        return e;
    }

  private:
    const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
    const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

    [[noreturn]] static void fail(const std::string& msg, const Token& at) {
        throw ParseError(msg, at.line, at.column);
    }

    const Token& expect(Tok kind) {
        if (peek().kind != kind)
            fail(fmt::format("expected {}, found {}", describe(kind), describe(peek().kind)), peek());
        return next();
    }

    ExprPtr parse_expr() {
        auto lhs = parse_term();
        while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
            const auto op = next().kind == Tok::plus ? BinaryOp::add : BinaryOp::sub;
            lhs = binary(op, lhs, parse_term());
        }
        return lhs;
    }

    ExprPtr parse_term() {
        auto lhs = parse_factor();
        while (peek().kind == Tok::star || peek().kind == Tok::slash) {
            const auto op = next().kind == Tok::star ? BinaryOp::mul : BinaryOp::div;
            lhs = binary(op, lhs, parse_factor());
        }
        return lhs;
    }

    ExprPtr parse_factor() {
        if (peek().kind == Tok::minus) {
            next();
            if (peek().kind == Tok::number) return constant(-next().number);
            return unary(UnaryOp::neg, parse_factor());
        }
        return parse_primary();
    }

    ExprPtr parse_primary() {
        const Token& t = peek();
        switch (t.kind) {
        case Tok::number: return constant(next().number);
        case Tok::lparen: {
            next();
            auto e = parse_expr();
            expect(Tok::rparen);
            return e;
        }
        case Tok::ident: return parse_call();
        default: fail(fmt::format("expected an expression, found {}", describe(t.kind)), t);
        }
    }

    ExprPtr parse_call() {
        const Token name = next();
        expect(Tok::lparen);
        if (name.text == "col") {
            const Token& arg = peek();
            if (arg.kind != Tok::ident && arg.kind != Tok::string)
                fail("col() takes a column name", arg);
            std::string column = next().text;
            if (peek().kind == Tok::comma) fail("function 'col' expects 1 argument", peek());
            expect(Tok::rparen);
            return fx::col(std::move(column));
        }

        const std::vector<Param>* params = signature(name.text);
        if (!params) fail(fmt::format("unknown function '{}'", name.text), name);

        std::vector<std::optional<Argument>> slots(params->size());
        std::size_t positional = 0;
        std::size_t given = 0;
        bool seen_named = false;
        if (peek().kind != Tok::rparen) {
            for (;;) {
                const Token at = peek();
                if (at.kind == Tok::ident && peek(1).kind == Tok::equals) {
                    next();
                    next();
                    seen_named = true;
                    std::size_t k = 0;
                    while (k < params->size() && (*params)[k].name != at.text) ++k;
                    if (k == params->size() || (*params)[k].kind == ParamKind::expr)
                        fail(fmt::format("function '{}' has no parameter '{}'", name.text, at.text), at);
                    if (slots[k]) fail(fmt::format("parameter '{}' given twice", at.text), at);
                    slots[k] = Argument{parse_expr(), at};
                } else {
                    if (seen_named) fail("positional argument after named argument", at);
                    auto e = parse_expr();
                    if (positional < slots.size()) slots[positional] = Argument{std::move(e), at};
                    ++positional;
                }
                ++given;
                if (peek().kind != Tok::comma) break;
                next();
            }
        }
        const Token& close = expect(Tok::rparen);
        std::size_t required = 0;
        for (const auto& p : *params) required += p.required ? 1 : 0;
        if (positional > params->size() || given < required) {
            const std::string expected = required == params->size()
                                             ? fmt::format("{}", required)
                                             : fmt::format("{} to {}", required, params->size());
            fail(fmt::format("function '{}' expects {} arguments, got {}", name.text, expected, given), name);
        }
        for (std::size_t k = 0; k < params->size(); ++k)
            if ((*params)[k].required && !slots[k])
                fail(fmt::format("function '{}' is missing argument '{}'", name.text, (*params)[k].name), close);

        return build(name, *params, slots);
    }

    static double literal(const std::optional<Argument>& a, const Param& p) {
        const auto* c = std::get_if<Constant>(&a->expr->node);
        if (!c) fail(fmt::format("argument '{}' must be a numeric literal", p.name), a->at);
        if (p.kind == ParamKind::integer && (std::floor(c->value) != c->value || std::abs(c->value) > 1e15))
            fail(fmt::format("argument '{}' must be an integer", p.name), a->at);
        return c->value;
    }

    static std::int64_t integer(const std::optional<Argument>& a, const Param& p, std::int64_t fallback) {
        return a ? static_cast<std::int64_t>(literal(a, p)) : fallback;
    }

    static ExprPtr build(const Token& name, const std::vector<Param>& params,
                         const std::vector<std::optional<Argument>>& s) {
        const std::string& f = name.text;
        const ExprPtr& a0 = s[0]->expr;
        if (f == "neg") return unary(UnaryOp::neg, a0);
        if (f == "abs") return unary(UnaryOp::abs, a0);
        if (f == "log") return unary(UnaryOp::log, a0);
        if (f == "sqrt") return unary(UnaryOp::sqrt, a0);
        if (f == "add") return binary(BinaryOp::add, a0, s[1]->expr);
        if (f == "sub") return binary(BinaryOp::sub, a0, s[1]->expr);
        if (f == "mul") return binary(BinaryOp::mul, a0, s[1]->expr);
        if (f == "div") return binary(BinaryOp::div, a0, s[1]->expr);
        if (f == "cs_rank") return cs_rank(a0);
        if (f == "cs_zscore") return cs_zscore(a0);
        if (f == "lag") return lag(a0, integer(s[1], params[1], 0));
        if (f == "ewm_mean") return ewm_mean(a0, integer(s[1], params[1], 0));
        if (f == "fillna") return fill_missing(a0, literal(s[1], params[1]));
        if (f == "ts_zscore") {
            const auto window = integer(s[1], params[1], 0);
            return ts_zscore(a0, window, integer(s[2], params[2], window), integer(s[3], params[3], 1),
                             s[4] ? literal(s[4], params[4]) : 1e-8);
        }
        const RollingKind kind = f == "rolling_mean"  ? RollingKind::mean
                                 : f == "rolling_std" ? RollingKind::std
                                 : f == "rolling_min" ? RollingKind::min
                                                      : RollingKind::max;
        const auto window = integer(s[1], params[1], 0);
        const std::int64_t ddof = kind == RollingKind::std ? integer(s[3], params[3], 0) : 0;
        return rolling(kind, a0, window, integer(s[2], params[2], window), ddof);
    }

    static const std::vector<Param>* signature(const std::string& name) {
        static const std::vector<Param> one{{"x", ParamKind::expr, true}};
        static const std::vector<Param> two{{"lhs", ParamKind::expr, true}, {"rhs", ParamKind::expr, true}};
        static const std::vector<Param> lag_sig{{"x", ParamKind::expr, true}, {"days", ParamKind::integer, true}};
        static const std::vector<Param> roll{{"x", ParamKind::expr, true},
                                             {"window", ParamKind::integer, true},
                                             {"min_periods", ParamKind::integer, false}};
        static const std::vector<Param> roll_std{{"x", ParamKind::expr, true},
                                                 {"window", ParamKind::integer, true},
                                                 {"min_periods", ParamKind::integer, false},
                                                 {"ddof", ParamKind::integer, false}};
        static const std::vector<Param> ewm{{"x", ParamKind::expr, true}, {"span", ParamKind::integer, true}};
        static const std::vector<Param> zs{{"x", ParamKind::expr, true},
                                           {"window", ParamKind::integer, true},
                                           {"min_periods", ParamKind::integer, false},
                                           {"ddof", ParamKind::integer, false},
                                           {"eps", ParamKind::real, false}};
        static const std::vector<Param> fill{{"x", ParamKind::expr, true}, {"value", ParamKind::real, true}};
        static const std::map<std::string, const std::vector<Param>*, std::less<>> table{
            {"neg", &one},          {"abs", &one},           {"log", &one},          {"sqrt", &one},
            {"add", &two},          {"sub", &two},           {"mul", &two},          {"div", &two},
            {"lag", &lag_sig},      {"rolling_mean", &roll}, {"rolling_min", &roll}, {"rolling_max", &roll},
            {"rolling_std", &roll_std}, {"ewm_mean", &ewm},  {"ts_zscore", &zs},     {"cs_rank", &one},
            {"cs_zscore", &one},    {"fillna", &fill},
        };
        const auto it = table.find(name);
        return it == table.end() ? nullptr : it->second;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

} // namespace

ExprPtr parse_feature(std::string_view text) {
    Parser p(Lexer(text).run());
    return p.parse_all();
}

std::vector<FeatureDef> parse_feature_manifest(std::string_view text) {
    std::vector<FeatureDef> out;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::string pending;
    std::size_t line_no = 0;
    std::size_t start_line = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        while (!raw.empty() && std::isspace(static_cast<unsigned char>(raw.back()))) raw.pop_back();
        if (pending.empty()) start_line = line_no;
        if (!raw.empty() && raw.back() == '\\') {
            raw.pop_back();
            pending += raw + "\n";
            continue;
        }
        pending += raw;
        std::string entry = std::move(pending);
        pending.clear();
        if (entry.find_first_not_of(" \t\n") == std::string::npos) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos)
            throw DataError(fmt::format("feature manifest line {}: expected 'name = expression'", start_line));
        std::string name = entry.substr(0, eq);
        std::string body = entry.substr(eq + 1);
        const auto strip = [](std::string& s) {
            const auto b = s.find_first_not_of(" \t\n");
            const auto e = s.find_last_not_of(" \t\n");
            s = b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        strip(name);
        strip(body);
        if (name.empty()) throw DataError(fmt::format("feature manifest line {}: empty feature name", start_line));
        for (const auto& f : out)
            if (f.name == name)
                throw DataError(fmt::format("feature manifest line {}: duplicate feature '{}'", start_line, name));
        try {
            auto expr = parse_feature(body);
            out.push_back({std::move(name), std::move(body), std::move(expr)});
        } catch (const ParseError& e) {
            throw DataError(fmt::format("feature manifest line {} ('{}'): {}", start_line, name, e.what()));
        }
    }
    return out;
}

std::vector<FeatureDef> load_feature_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot open feature manifest '{}'", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_feature_manifest(buf.str());
}

} // namespace xsa::fx
