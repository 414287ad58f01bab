#include "lmkg/pattern.hpp"

#include "lmkg/error.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>

namespace lmkg {

const char *to_string(Topology t) { return t == Topology::star ? "star" : "chain"; }

Topology parse_topology(std::string_view s) {
    if (s == "star") return Topology::star;
    if (s == "chain") return Topology::chain;
    throw Error(ErrorCode::invalid_argument, "unknown topology '" + std::string(s) + "'");
}

std::string to_string(Shape s) { return std::string(to_string(s.topology)) + "-" + std::to_string(s.k); }

Slot Slot::bound(std::uint32_t id) {
    if (id == kUnbound) throw Error(ErrorCode::invalid_argument, "bound slot id must be >= 1");
    return Slot(false, id);
}

std::size_t QueryPattern::var_count() const {
    std::size_t n = 0;
    for (const auto &s : nodes) n += s.is_var();
    for (const auto &s : preds) n += s.is_var();
    return n;
}

QueryPattern QueryPattern::star(Slot subject, std::vector<std::pair<Slot, Slot>> pairs) {
    QueryPattern qp;
    qp.topology = Topology::star;
    qp.nodes.push_back(subject);
    for (auto &[p, o] : pairs) {
        qp.preds.push_back(p);
        qp.nodes.push_back(o);
    }
    return qp;
}

QueryPattern QueryPattern::chain(std::vector<Slot> nodes, std::vector<Slot> preds) {
    QueryPattern qp;
    qp.topology = Topology::chain;
    qp.nodes = std::move(nodes);
    qp.preds = std::move(preds);
    return qp;
}

QueryPattern QueryPattern::unbound(Shape shape) {
    QueryPattern qp;
    qp.topology = shape.topology;
    std::uint32_t v = 0;
    qp.nodes.push_back(Slot::var(v++));
    for (std::uint32_t i = 0; i < shape.k; ++i) {
        qp.preds.push_back(Slot::var(v++));
        qp.nodes.push_back(Slot::var(v++));
    }
    return qp;
}

void validate(const QueryPattern &qp) {
    if (qp.preds.empty()) throw Error(ErrorCode::invalid_argument, "pattern needs k >= 1 triples");
    if (qp.nodes.size() != qp.preds.size() + 1)
        throw Error(ErrorCode::invalid_argument, "pattern needs k + 1 node slots");
    std::vector<std::uint32_t> vars;
    for (std::size_t i = 0; i < qp.slot_count(); ++i)
        if (qp.slot(i).is_var()) vars.push_back(qp.slot(i).var_index());
    std::sort(vars.begin(), vars.end());
    if (std::adjacent_find(vars.begin(), vars.end()) != vars.end())
        throw Error(ErrorCode::unsupported_variable_reuse, "variable used in more than one slot");
}

// ---------------------------------------------------------------------------
// text form

namespace {

struct Token {
    enum Kind { var, bound, dot } kind;
    std::string name; // variable name
    Term term;

    bool same_term(const Token &o) const {
        if (kind != o.kind) return false;
        return kind == var ? name == o.name : term == o.term;
    }
    std::string show() const { return kind == var ? "?" + name : term.to_ntriples(); }
};

[[noreturn]] void syntax_error(const std::string &msg) {
    throw Error(ErrorCode::malformed_input, "query syntax: " + msg);
}

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto ident = [&](std::size_t from) {
        std::size_t j = from;
        while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_' || s[j] == '-')) ++j;
        return j;
    };
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '.') {
            out.push_back({Token::dot, {}, {}});
            ++i;
        } else if (c == '?') {
            const auto j = ident(i + 1);
            if (j == i + 1) syntax_error("empty variable name");
            out.push_back({Token::var, std::string(s.substr(i + 1, j - i - 1)), {}});
            i = j;
        } else if (c == '<') {
            const auto close = s.find('>', i);
            if (close == std::string_view::npos || close == i + 1) syntax_error("bad IRI");
            out.push_back({Token::bound, {}, Term::iri(std::string(s.substr(i + 1, close - i - 1)))});
            i = close + 1;
        } else if (c == '"') {
            std::size_t j = i + 1;
            bool closed = false;
            while (j < s.size()) {
                if (s[j] == '\\') {
                    j += 2;
                    continue;
                }
                if (s[j++] == '"') {
                    closed = true;
                    break;
                }
            }
            if (!closed) syntax_error("unterminated literal");
            if (j + 1 < s.size() && s[j] == '^' && s[j + 1] == '^') {
                const auto close = s.find('>', j);
                if (close == std::string_view::npos || s[j + 2] != '<') syntax_error("bad datatype IRI");
                j = close + 1;
            } else if (j < s.size() && s[j] == '@') {
                j = ident(j + 1);
            }
            out.push_back({Token::bound, {}, Term::literal(std::string(s.substr(i, j - i)))});
            i = j;
        } else if (c == '_' && i + 1 < s.size() && s[i + 1] == ':') {
            const auto j = ident(i + 2);
            if (j == i + 2) syntax_error("empty blank node label");
            out.push_back({Token::bound, {}, Term::blank(std::string(s.substr(i + 2, j - i - 2)))});
            i = j;
        } else {
            syntax_error(std::string("unexpected character '") + c + "'");
        }
    }
    return out;
}

struct TokenTriple {
    Token s, p, o;
};

} // namespace

QueryPattern parse_query_text(std::string_view text, const KnowledgeGraph &kg) {
    const auto tokens = tokenize(text);
    std::vector<TokenTriple> triples;
    std::vector<Token> current;
    auto flush = [&] {
        if (current.empty()) return;
        if (current.size() != 3) syntax_error("each statement needs exactly three terms");
        if (current[1].kind == Token::bound && current[1].term.kind != TermKind::iri)
            syntax_error("predicate must be an IRI or variable");
        triples.push_back({current[0], current[1], current[2]});
        current.clear();
    };
    for (const auto &t : tokens) {
        if (t.kind == Token::dot)
            flush();
        else
            current.push_back(t);
    }
    flush();
    if (triples.empty()) syntax_error("empty query");

    // Topology detection on the token level.
    std::vector<const Token *> node_tokens;
    std::vector<const Token *> pred_tokens;
    Topology topology;
    const bool shared_subject = std::all_of(triples.begin(), triples.end(),
                                            [&](const TokenTriple &t) { return t.s.same_term(triples[0].s); });
    if (shared_subject) {
        topology = Topology::star;
        node_tokens.push_back(&triples[0].s);
        for (const auto &t : triples) {
            pred_tokens.push_back(&t.p);
            node_tokens.push_back(&t.o);
        }
    } else {
        topology = Topology::chain;
        const std::size_t k = triples.size();
        // The start triple is the unique one whose subject is no other triple's object.
        std::optional<std::size_t> start;
        for (std::size_t i = 0; i < k; ++i) {
            bool is_target = false;
            for (std::size_t j = 0; j < k; ++j)
                if (j != i && triples[j].o.same_term(triples[i].s)) is_target = true;
            if (!is_target) {
                if (start) throw Error(ErrorCode::unsupported_topology, "query is neither a star nor a chain");
                start = i;
            }
        }
        if (!start) throw Error(ErrorCode::unsupported_topology, "query is neither a star nor a chain");
        std::vector<bool> used(k, false);
        std::size_t cur = *start;
        used[cur] = true;
        node_tokens.push_back(&triples[cur].s);
        for (std::size_t step = 0; step < k; ++step) {
            pred_tokens.push_back(&triples[cur].p);
            node_tokens.push_back(&triples[cur].o);
            if (step + 1 == k) break;
            std::optional<std::size_t> next;
            for (std::size_t j = 0; j < k; ++j) {
                if (used[j] || !triples[j].s.same_term(triples[cur].o)) continue;
                if (next) throw Error(ErrorCode::unsupported_topology, "query is neither a star nor a chain");
                next = j;
            }
            if (!next) throw Error(ErrorCode::unsupported_topology, "query is neither a star nor a chain");
            cur = *next;
            used[cur] = true;
        }
    }

    // Each variable may occupy exactly one slot.
    std::map<std::string, std::uint32_t> var_ids;
    auto to_slot = [&](const Token &t, IdSpace space) {
        if (t.kind == Token::var) {
            auto [it, inserted] = var_ids.try_emplace(t.name, static_cast<std::uint32_t>(var_ids.size()));
            if (!inserted)
                throw Error(ErrorCode::unsupported_variable_reuse, "variable ?" + t.name + " used in more than one slot");
            return Slot::var(it->second);
        }
        const auto id = term_to_id(kg, t.term, space);
        if (!id) throw Error(ErrorCode::unknown_term, "unknown term " + t.show());
        return Slot::bound(*id);
    };
    QueryPattern qp;
    qp.topology = topology;
    // flat slot order: n0, p0, n1, p1, ...
    qp.nodes.push_back(to_slot(*node_tokens[0], IdSpace::node));
    for (std::size_t i = 0; i < pred_tokens.size(); ++i) {
        qp.preds.push_back(to_slot(*pred_tokens[i], IdSpace::predicate));
        qp.nodes.push_back(to_slot(*node_tokens[i + 1], IdSpace::node));
    }
    return qp;
}

std::string pattern_to_text(const QueryPattern &qp, const KnowledgeGraph &kg) {
    std::vector<std::string> names(qp.slot_count());
    std::uint32_t fresh = 0;
    for (std::size_t i = 0; i < qp.slot_count(); ++i) {
        const auto &s = qp.slot(i);
        if (s.is_var())
            names[i] = "?v" + std::to_string(fresh++);
        else
            names[i] = id_to_term(kg, s.id(), QueryPattern::is_pred_slot(i) ? IdSpace::predicate : IdSpace::node)
                           .to_ntriples();
    }
    std::string out;
    for (std::size_t t = 0; t < qp.k(); ++t) {
        const std::size_t subj = qp.topology == Topology::star ? 0 : 2 * t;
        out += names[subj] + " " + names[2 * t + 1] + " " + names[2 * t + 2] + " .";
        if (t + 1 < qp.k()) out += ' ';
    }
    return out;
}

// ---------------------------------------------------------------------------
// canonical form

namespace {

void renumber_vars(QueryPattern &qp) {
    std::uint32_t next = 0;
    for (std::size_t i = 0; i < qp.slot_count(); ++i)
        if (qp.slot(i).is_var()) qp.slot(i) = Slot::var(next++);
}

} // namespace

QueryPattern canonicalize_pattern(const QueryPattern &qp) {
    validate(qp);
    QueryPattern out = qp;
    if (qp.topology == Topology::star) {
        std::vector<std::pair<Slot, Slot>> pairs;
        for (std::size_t i = 0; i < qp.k(); ++i) pairs.emplace_back(qp.preds[i], qp.nodes[i + 1]);
        // variables sort before every bound id; they all compare equal so that
        // permuting the input pairs cannot change the result
        std::stable_sort(pairs.begin(), pairs.end(), [](const auto &a, const auto &b) {
            return std::pair(a.first.id(), a.second.id()) < std::pair(b.first.id(), b.second.id());
        });
        std::vector<std::pair<Slot, Slot>> kept;
        for (const auto &pr : pairs) {
            const bool bound_pair = pr.first.is_bound() && pr.second.is_bound();
            if (bound_pair && !kept.empty() && kept.back() == pr) continue;
            kept.push_back(pr);
        }
        out = QueryPattern::star(qp.nodes[0], std::move(kept));
    }
    renumber_vars(out);
    return out;
}

bool is_canonical(const QueryPattern &qp) { return canonicalize_pattern(qp) == qp; }

std::string canonical_key(const QueryPattern &qp) {
    std::string key = std::string(to_string(qp.topology)) + "|" + std::to_string(qp.k()) + "|";
    for (std::size_t i = 0; i < qp.slot_count(); ++i) {
        if (i) key += ',';
        key += qp.slot(i).is_var() ? std::string("?") : std::to_string(qp.slot(i).id());
    }
    return key;
}

// ---------------------------------------------------------------------------
// JSON form

nlohmann::json pattern_to_json(const QueryPattern &qp, const KnowledgeGraph &kg) {
    nlohmann::json slots = nlohmann::json::array();
    for (std::size_t i = 0; i < qp.slot_count(); ++i) {
        const bool is_pred = QueryPattern::is_pred_slot(i);
        nlohmann::json slot;
        slot["role"] = is_pred ? "pred" : (i == 0 ? "subject" : "object");
        const auto &s = qp.slot(i);
        if (s.is_var())
            slot["bound"] = nullptr;
        else
            slot["bound"] = id_to_term(kg, s.id(), is_pred ? IdSpace::predicate : IdSpace::node).to_ntriples();
        slots.push_back(std::move(slot));
    }
    return {{"topology", to_string(qp.topology)}, {"k", qp.k()}, {"slots", std::move(slots)}};
}

namespace {

Term term_from_ntriples(const std::string &s) {
    if (s.size() >= 2 && s.front() == '<' && s.back() == '>') return Term::iri(s.substr(1, s.size() - 2));
    if (s.size() > 2 && s.starts_with("_:")) return Term::blank(s.substr(2));
    if (!s.empty() && s.front() == '"') return Term::literal(s);
    throw Error(ErrorCode::malformed_input, "bad term '" + s + "'");
}

} // namespace

QueryPattern pattern_from_json(const nlohmann::json &j, const KnowledgeGraph &kg) {
    try {
        QueryPattern qp;
        qp.topology = parse_topology(j.at("topology").get<std::string>());
        const auto k = j.at("k").get<std::uint32_t>();
        const auto &slots = j.at("slots");
        if (k == 0 || slots.size() != 2 * static_cast<std::size_t>(k) + 1)
            throw Error(ErrorCode::malformed_input, "slot count does not match k");
        std::uint32_t next_var = 0;
        for (std::size_t i = 0; i < slots.size(); ++i) {
            const auto &b = slots[i].at("bound");
            const bool is_pred = QueryPattern::is_pred_slot(i);
            Slot slot = Slot::var(0);
            if (b.is_null()) {
                slot = Slot::var(next_var++);
            } else {
                const auto term = term_from_ntriples(b.get<std::string>());
                const auto id = term_to_id(kg, term, is_pred ? IdSpace::predicate : IdSpace::node);
                if (!id) throw Error(ErrorCode::unknown_term, "unknown term " + b.get<std::string>());
                slot = Slot::bound(*id);
            }
            (is_pred ? qp.preds : qp.nodes).push_back(slot);
        }
        validate(qp);
        return qp;
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::malformed_input, std::string("bad pattern JSON: ") + e.what());
    }
}

} // namespace lmkg
