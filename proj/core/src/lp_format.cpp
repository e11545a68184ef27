#include "nwa/lp_format.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace nwa {

namespace {

void append_expr(std::string& out, const LinExpr& e, const Model& m) {
    bool first = true;
    for (const Term& t : e.terms()) {
        double c = t.coef;
        if (first) {
            if (c < 0) out += "- ";
            first = false;
        } else {
            out += (c < 0) ? " - " : " + ";
        }
        out += format_number(std::abs(c));
        out += ' ';
        out += m.variable(t.var).name;
    }
    if (first) out += "0";
}

}  // namespace

std::string emit_model_file(const Model& model) {
    std::string out;
    out.reserve(256 + 64 * (model.num_variables() + model.num_constraints()));
    out += "Minimize\n obj: ";
    append_expr(out, model.objective(), model);
    if (model.objective().constant() != 0.0) {
        double c = model.objective().constant();
        out += (c < 0) ? " - " : " + ";
        out += format_number(std::abs(c));
    }
    out += "\nSubject To\n";
    for (const Constraint& con : model.constraints()) {
        out += ' ';
        out += con.name;
        out += ": ";
        append_expr(out, con.expr, model);
        switch (con.sense) {
            case Sense::Le: out += " <= "; break;
            case Sense::Eq: out += " = "; break;
            case Sense::Ge: out += " >= "; break;
        }
        out += format_number(con.rhs);
        out += '\n';
    }
    out += "Bounds\n";
    for (const Variable& v : model.variables()) {
        out += ' ';
        if (v.lb == v.ub) {
            out += v.name + " = " + format_number(v.lb);
        } else if (v.lb == -kInf && v.ub == kInf) {
            out += v.name + " free";
        } else if (v.ub == kInf) {
            out += format_number(v.lb) + " <= " + v.name;
        } else if (v.lb == -kInf) {
            out += v.name + " <= " + format_number(v.ub);
        } else {
            out += format_number(v.lb) + " <= " + v.name + " <= " + format_number(v.ub);
        }
        out += '\n';
    }
    bool any_bin = false;
    for (const Variable& v : model.variables()) {
        if (v.kind == VarKind::Binary) {
            if (!any_bin) {
                out += "Binary\n";
                any_bin = true;
            }
            out += ' ';
            out += v.name;
            out += '\n';
        }
    }
    out += "End\n";
    return out;
}

namespace {

struct Tok {
    enum Kind { Name, Number, Plus, Minus, Le, Ge, EqSign, Colon, EndOfLine } kind;
    std::string text;
    double value = 0.0;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) {}

    // Returns tokens of the next non-empty line; false at end of input.
    bool next_line(std::vector<Tok>& toks) {
        toks.clear();
        while (pos_ < text_.size()) {
            std::size_t eol = text_.find('\n', pos_);
            if (eol == std::string::npos) eol = text_.size();
            std::size_t p = pos_;
            pos_ = eol + 1;
            lex_range(p, eol, toks);
            if (!toks.empty()) return true;
        }
        return false;
    }

private:
    void lex_range(std::size_t p, std::size_t end, std::vector<Tok>& toks) {
        while (p < end) {
            char c = text_[p];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++p;
                continue;
            }
            if (c == '\\') break;  // comment to end of line
            if (c == '+') {
                toks.push_back({Tok::Plus, "+"});
                ++p;
            } else if (c == '-') {
                toks.push_back({Tok::Minus, "-"});
                ++p;
            } else if (c == ':') {
                toks.push_back({Tok::Colon, ":"});
                ++p;
            } else if (c == '<' || c == '>') {
                Tok t{c == '<' ? Tok::Le : Tok::Ge, std::string(1, c)};
                ++p;
                if (p < end && text_[p] == '=') ++p;
                toks.push_back(t);
            } else if (c == '=') {
                ++p;
                toks.push_back({Tok::EqSign, "="});
            } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                const char* start = text_.c_str() + p;
                char* endp = nullptr;
                double v = std::strtod(start, &endp);
                std::size_t len = static_cast<std::size_t>(endp - start);
                Tok t{Tok::Number, text_.substr(p, len)};
                t.value = v;
                toks.push_back(t);
                p += len;
            } else {
                std::size_t s = p;
                while (p < end && !std::isspace(static_cast<unsigned char>(text_[p])) &&
                       std::string("+-:<>=").find(text_[p]) == std::string::npos)
                    ++p;
                toks.push_back({Tok::Name, text_.substr(s, p - s)});
            }
        }
    }

    const std::string& text_;
    std::size_t pos_ = 0;
};

bool iequal(const std::string& a, const char* b) {
    std::size_t n = 0;
    for (; b[n]; ++n) {
        if (n >= a.size()) return false;
        if (std::tolower(static_cast<unsigned char>(a[n])) !=
            std::tolower(static_cast<unsigned char>(b[n])))
            return false;
    }
    return n == a.size();
}

bool is_keyword_line(const std::vector<Tok>& toks, const char* kw1, const char* kw2 = nullptr) {
    if (toks.empty() || toks[0].kind != Tok::Name) return false;
    if (kw2 == nullptr) return toks.size() == 1 && iequal(toks[0].text, kw1);
    return toks.size() == 2 && toks[1].kind == Tok::Name && iequal(toks[0].text, kw1) &&
           iequal(toks[1].text, kw2);
}

// Parses "[name :] [+-] [num] var [+-] [num] var ... [sense num]".
struct ParsedRow {
    std::string label;
    std::vector<std::pair<std::string, double>> terms;
    double constant = 0.0;
    bool has_sense = false;
    Sense sense = Sense::Eq;
    double rhs = 0.0;
};

ParsedRow parse_row(const std::vector<Tok>& toks) {
    ParsedRow row;
    std::size_t i = 0;
    if (toks.size() >= 2 && toks[0].kind == Tok::Name && toks[1].kind == Tok::Colon) {
        row.label = toks[0].text;
        i = 2;
    }
    double sign = 1.0;
    bool have_coef = false;
    double coef = 1.0;
    for (; i < toks.size(); ++i) {
        const Tok& t = toks[i];
        switch (t.kind) {
            case Tok::Plus: sign = 1.0; have_coef = false; coef = 1.0; break;
            case Tok::Minus: sign = -1.0; have_coef = false; coef = 1.0; break;
            case Tok::Number:
                if (have_coef) throw std::runtime_error("lp parse: dangling number");
                coef = t.value;
                have_coef = true;
                break;
            case Tok::Name:
                row.terms.emplace_back(t.text, sign * coef);
                sign = 1.0;
                coef = 1.0;
                have_coef = false;
                break;
            case Tok::Le:
            case Tok::Ge:
            case Tok::EqSign: {
                row.has_sense = true;
                row.sense = t.kind == Tok::Le ? Sense::Le
                          : t.kind == Tok::Ge ? Sense::Ge
                                              : Sense::Eq;
                if (i + 1 >= toks.size())
                    throw std::runtime_error("lp parse: missing rhs");
                double rsign = 1.0;
                std::size_t j = i + 1;
                if (toks[j].kind == Tok::Minus) {
                    rsign = -1.0;
                    ++j;
                } else if (toks[j].kind == Tok::Plus) {
                    ++j;
                }
                if (j >= toks.size() || toks[j].kind != Tok::Number)
                    throw std::runtime_error("lp parse: rhs is not a number");
                row.rhs = rsign * toks[j].value;
                if (j + 1 != toks.size()) throw std::runtime_error("lp parse: trailing tokens");
                i = toks.size();
                break;
            }
            default: throw std::runtime_error("lp parse: unexpected token");
        }
        if (i == toks.size()) break;
    }
    if (have_coef) row.constant += sign * coef;  // bare trailing constant
    return row;
}

}  // namespace

Model parse_model_file(const std::string& text) {
    Lexer lex(text);
    std::vector<Tok> toks;

    enum Section { None, Objective, Constraints, Bounds, Binaries, Done } section = None;

    struct PendingCon {
        ParsedRow row;
    };
    ParsedRow objective;
    bool have_objective = false;
    std::vector<ParsedRow> cons;
    struct BoundSpec {
        double lb = 0.0, ub = kInf;
        bool set = false;
    };
    std::map<std::string, BoundSpec> bounds;
    std::vector<std::string> binaries;
    // Variables appear in first-reference order; bounds section can add more.
    std::vector<std::string> var_order;
    std::map<std::string, bool> seen;
    auto note_var = [&](const std::string& n) {
        if (!seen.count(n)) {
            seen[n] = true;
            var_order.push_back(n);
        }
    };

    while (lex.next_line(toks)) {
        if (is_keyword_line(toks, "minimize") || is_keyword_line(toks, "min")) {
            section = Objective;
            continue;
        }
        if (is_keyword_line(toks, "subject", "to") || is_keyword_line(toks, "st") ||
            is_keyword_line(toks, "s.t.")) {
            section = Constraints;
            continue;
        }
        if (is_keyword_line(toks, "bounds")) {
            section = Bounds;
            continue;
        }
        if (is_keyword_line(toks, "binary") || is_keyword_line(toks, "binaries")) {
            section = Binaries;
            continue;
        }
        if (is_keyword_line(toks, "end")) {
            section = Done;
            break;
        }
        switch (section) {
            case Objective: {
                ParsedRow r = parse_row(toks);
                if (!have_objective) {
                    objective = r;
                    have_objective = true;
                } else {
                    for (auto& t : r.terms) objective.terms.push_back(t);
                    objective.constant += r.constant;
                }
                for (auto& t : r.terms) note_var(t.first);
                break;
            }
            case Constraints: {
                ParsedRow r = parse_row(toks);
                if (!r.has_sense) throw std::runtime_error("lp parse: constraint without sense");
                for (auto& t : r.terms) note_var(t.first);
                cons.push_back(std::move(r));
                break;
            }
            case Bounds: {
                // Forms: "l <= x <= u", "l <= x", "x <= u", "x = v", "x free".
                if (toks.size() == 2 && toks[0].kind == Tok::Name && toks[1].kind == Tok::Name &&
                    iequal(toks[1].text, "free")) {
                    note_var(toks[0].text);
                    bounds[toks[0].text] = {-kInf, kInf, true};
                    break;
                }
                ParsedRow r;  // reuse the token walker manually for bound lines
                // Pattern match on token kinds.
                auto num_at = [&](std::size_t i, double& out) {
                    double s = 1.0;
                    if (i < toks.size() && (toks[i].kind == Tok::Minus || toks[i].kind == Tok::Plus)) {
                        s = toks[i].kind == Tok::Minus ? -1.0 : 1.0;
                        ++i;
                    }
                    if (i < toks.size() && toks[i].kind == Tok::Number) {
                        out = s * toks[i].value;
                        return i + 1;
                    }
                    return std::size_t(0);
                };
                double a = 0.0, b = 0.0;
                std::size_t i = num_at(0, a);
                if (i > 0 && i < toks.size() && toks[i].kind == Tok::Le &&
                    i + 1 < toks.size() && toks[i + 1].kind == Tok::Name) {
                    std::string name = toks[i + 1].text;
                    note_var(name);
                    BoundSpec& bs = bounds[name];
                    if (!bs.set) bs = {0.0, kInf, true};
                    bs.lb = a;
                    std::size_t j = i + 2;
                    if (j < toks.size()) {
                        if (toks[j].kind != Tok::Le) throw std::runtime_error("lp parse: bad bound");
                        std::size_t k = num_at(j + 1, b);
                        if (k == 0) throw std::runtime_error("lp parse: bad bound");
                        bs.ub = b;
                    }
                    break;
                }
                if (!toks.empty() && toks[0].kind == Tok::Name) {
                    std::string name = toks[0].text;
                    note_var(name);
                    BoundSpec& bs = bounds[name];
                    if (!bs.set) bs = {0.0, kInf, true};
                    if (toks.size() >= 2 && toks[1].kind == Tok::Le) {
                        std::size_t k = num_at(2, b);
                        if (k == 0) throw std::runtime_error("lp parse: bad bound");
                        bs.ub = b;
                        break;
                    }
                    if (toks.size() >= 2 && toks[1].kind == Tok::EqSign) {
                        std::size_t k = num_at(2, b);
                        if (k == 0) throw std::runtime_error("lp parse: bad bound");
                        bs.lb = bs.ub = b;
                        break;
                    }
                }
                throw std::runtime_error("lp parse: unrecognized bound line");
            }
            case Binaries:
                for (const Tok& t : toks) {
                    if (t.kind != Tok::Name) throw std::runtime_error("lp parse: bad binary line");
                    note_var(t.text);
                    binaries.push_back(t.text);
                }
                break;
            default: throw std::runtime_error("lp parse: content outside any section");
        }
    }

    std::map<std::string, bool> is_bin;
    for (const std::string& b : binaries) is_bin[b] = true;

    Model m;
    for (const std::string& name : var_order) {
        double lb = 0.0, ub = kInf;
        auto it = bounds.find(name);
        if (it != bounds.end()) {
            lb = it->second.lb;
            ub = it->second.ub;
        }
        if (is_bin.count(name)) {
            m.add_binary(name);
        } else {
            m.add_continuous(name, lb, ub);
        }
    }
    if (have_objective) {
        LinExpr obj(objective.constant);
        for (auto& [name, coef] : objective.terms) obj.add(m.find_variable(name), coef);
        m.set_objective(std::move(obj));
    }
    int anon = 0;
    for (ParsedRow& r : cons) {
        LinExpr e(r.constant);
        for (auto& [name, coef] : r.terms) e.add(m.find_variable(name), coef);
        std::string label = r.label.empty() ? ("c" + std::to_string(anon++)) : r.label;
        m.add_constraint(std::move(e), r.sense, r.rhs, label);
    }
    return m;
}

std::string to_string(SolStatus s) {
    switch (s) {
        case SolStatus::Optimal: return "optimal";
        case SolStatus::Infeasible: return "infeasible";
        case SolStatus::Unbounded: return "unbounded";
        case SolStatus::LimitHit: return "limit_hit";
        default: return "error";
    }
}

std::string emit_solution_doc(const SolutionDoc& doc) {
    std::string out = "status " + to_string(doc.status) + "\n";
    out += "objective " + format_number(doc.objective) + "\n";
    out += "primal\n";
    for (const auto& [k, v] : doc.primal) out += k + " " + format_number(v) + "\n";
    out += "dual\n";
    for (const auto& [k, v] : doc.dual) out += k + " " + format_number(v) + "\n";
    out += "end\n";
    return out;
}

SolutionDoc parse_solution_doc(const std::string& text) {
    SolutionDoc doc;
    std::istringstream in(text);
    std::string line;
    enum { Head, Primal, Dual, Ended } sec = Head;
    bool saw_status = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string a;
        if (!(ls >> a)) continue;
        if (a == "primal") {
            sec = Primal;
            continue;
        }
        if (a == "dual") {
            sec = Dual;
            continue;
        }
        if (a == "end") {
            sec = Ended;
            break;
        }
        if (sec == Head) {
            if (a == "status") {
                std::string s;
                ls >> s;
                if (s == "optimal") doc.status = SolStatus::Optimal;
                else if (s == "infeasible") doc.status = SolStatus::Infeasible;
                else if (s == "unbounded") doc.status = SolStatus::Unbounded;
                else if (s == "limit_hit") doc.status = SolStatus::LimitHit;
                else doc.status = SolStatus::Error;
                saw_status = true;
            } else if (a == "objective") {
                ls >> doc.objective;
            }
        } else {
            double v = 0.0;
            if (!(ls >> v)) throw std::runtime_error("solution doc: bad value line: " + line);
            (sec == Primal ? doc.primal : doc.dual)[a] = v;
        }
    }
    if (!saw_status) throw std::runtime_error("solution doc: missing status");
    return doc;
}

}  // namespace nwa
