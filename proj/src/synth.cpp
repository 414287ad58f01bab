#include "lmkg/synth.hpp"

#include "lmkg/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lmkg {

ZipfTable::ZipfTable(std::size_t n, double s) {
    if (n == 0) throw Error(ErrorCode::invalid_argument, "Zipf table needs n >= 1");
    cumulative_.resize(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) cumulative_[i] = acc += 1.0 / std::pow(static_cast<double>(i + 1), s);
}

std::size_t ZipfTable::draw(Rng &rng) const {
    const double u = uniform_unit(rng) * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
}

KnowledgeGraph generate_random_kg(const RandomKgConfig &c) {
    if (c.nodes < 1 || c.preds < 1) throw Error(ErrorCode::invalid_argument, "need at least one node and predicate");
    Rng rng(c.seed);
    Dictionary nodes, preds;
    for (std::size_t i = 0; i < c.nodes; ++i) nodes.intern(Term::iri("http://example.org/n" + std::to_string(i)));
    for (std::size_t i = 0; i < c.preds; ++i) preds.intern(Term::iri("http://example.org/p" + std::to_string(i)));
    // Popularity ranks are shuffled so frequent subjects and objects differ.
    auto ranks = [&](std::size_t n) {
        std::vector<std::uint32_t> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = static_cast<std::uint32_t>(i + 1);
        for (std::size_t i = n; i > 1; --i) std::swap(r[i - 1], r[uniform_below(rng, i)]);
        return r;
    };
    const auto subj_rank = ranks(c.nodes);
    const auto obj_rank = ranks(c.nodes);
    const ZipfTable zn(c.nodes, c.skew), zp(c.preds, c.skew);
    std::vector<Triple> triples;
    triples.reserve(c.triples);
    for (std::size_t i = 0; i < c.triples; ++i)
        triples.push_back({subj_rank[zn.draw(rng)], static_cast<PredId>(zp.draw(rng) + 1), obj_rank[zn.draw(rng)]});
    return KnowledgeGraph(std::move(nodes), std::move(preds), std::move(triples));
}

namespace {

class UniversityBuilder {
  public:
    explicit UniversityBuilder(const UniversityKgConfig &c) : c_(c), rng_(c.seed), uni_zipf_(c.university_pool, c.skew) {
        for (const char *p : {"type", "name", "emailAddress", "telephone", "researchInterest", "worksFor", "memberOf",
                              "headOf", "subOrganizationOf", "teacherOf", "takesCourse", "advisor",
                              "teachingAssistantOf", "publicationAuthor", "undergraduateDegreeFrom",
                              "mastersDegreeFrom", "doctoralDegreeFrom"})
            preds_.intern(Term::iri(std::string(kOnto) + p));
        for (const char *t : {"University", "Department", "FullProfessor", "AssociateProfessor", "AssistantProfessor",
                              "Lecturer", "UndergraduateStudent", "GraduateStudent", "Course", "GraduateCourse",
                              "Publication", "ResearchGroup"})
            cls(t);
        for (std::size_t u = 0; u < c.university_pool; ++u) university(u);
    }

    KnowledgeGraph build() {
        for (std::size_t d = 0; triples_.size() < c_.target_triples; ++d) department(d);
        return KnowledgeGraph(std::move(nodes_), std::move(preds_), std::move(triples_));
    }

  private:
    static constexpr const char *kOnto = "http://example.org/univ-bench#";
    static constexpr const char *kData = "http://example.org/data/";

    NodeId node(const std::string &iri) { return nodes_.intern(Term::iri(kData + iri)); }
    NodeId cls(const std::string &name) { return nodes_.intern(Term::iri(std::string(kOnto) + name)); }
    NodeId literal(const std::string &text) { return nodes_.intern(Term::literal("\"" + text + "\"")); }
    PredId pred(const char *name) { return *preds_.find(Term::iri(std::string(kOnto) + name)); }
    void add(NodeId s, const char *p, NodeId o) { triples_.push_back({s, pred(p), o}); }

    std::size_t between(std::size_t lo, std::size_t hi) { return lo + uniform_below(rng_, hi - lo + 1); }
    bool chance(double p) { return uniform_unit(rng_) < p; }

    NodeId university(std::size_t u) {
        const auto n = node("University" + std::to_string(u));
        if (u >= universities_.size()) {
            universities_.push_back(n);
            add(n, "type", cls("University"));
            add(n, "name", literal("University " + std::to_string(u)));
        }
        return n;
    }

    void person(NodeId n, const std::string &id, const char *type, NodeId dept, const char *link) {
        add(n, "type", cls(type));
        add(n, link, dept);
        add(n, "name", literal(id));
        add(n, "emailAddress", literal(id + "@example.org"));
    }

    void department(std::size_t d) {
        const std::string ds = "Department" + std::to_string(d);
        const auto dept = node(ds);
        add(dept, "type", cls("Department"));
        add(dept, "name", literal(ds));
        add(dept, "subOrganizationOf", universities_[d / c_.departments_per_university % universities_.size()]);

        // Department size is skewed too: a few large departments, many small ones.
        const double scale = 0.5 + 1.5 / std::sqrt(static_cast<double>(1 + uniform_below(rng_, 8)));
        auto scaled = [&](std::size_t lo, std::size_t hi) {
            return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(between(lo, hi)) * scale)));
        };

        std::vector<NodeId> groups;
        for (std::size_t g = 0, n = scaled(3, 8); g < n; ++g) {
            const auto rg = node(ds + "/ResearchGroup" + std::to_string(g));
            add(rg, "type", cls("ResearchGroup"));
            add(rg, "subOrganizationOf", dept);
            groups.push_back(rg);
        }
        std::vector<NodeId> courses, grad_courses;
        for (std::size_t i = 0, n = scaled(10, 20); i < n; ++i) {
            const auto co = node(ds + "/Course" + std::to_string(i));
            add(co, "type", cls("Course"));
            add(co, "name", literal(ds + " Course " + std::to_string(i)));
            courses.push_back(co);
        }
        for (std::size_t i = 0, n = scaled(6, 12); i < n; ++i) {
            const auto co = node(ds + "/GraduateCourse" + std::to_string(i));
            add(co, "type", cls("GraduateCourse"));
            add(co, "name", literal(ds + " Graduate Course " + std::to_string(i)));
            grad_courses.push_back(co);
        }

        static const char *kRanks[] = {"FullProfessor", "AssociateProfessor", "AssistantProfessor", "Lecturer"};
        const std::size_t counts[] = {scaled(2, 4), scaled(3, 5), scaled(2, 4), scaled(1, 3)};
        std::vector<NodeId> faculty, professors;
        for (int r = 0; r < 4; ++r)
            for (std::size_t i = 0; i < counts[r]; ++i) {
                const std::string id = ds + "/" + kRanks[r] + std::to_string(i);
                const auto f = node(id);
                person(f, id, kRanks[r], dept, "worksFor");
                add(f, "telephone", literal("tel-" + std::to_string(triples_.size())));
                add(f, "researchInterest", literal("Research" + std::to_string(topic_zipf_.draw(rng_))));
                add(f, "undergraduateDegreeFrom", universities_[uni_zipf_.draw(rng_)]);
                if (r < 3) {
                    add(f, "mastersDegreeFrom", universities_[uni_zipf_.draw(rng_)]);
                    add(f, "doctoralDegreeFrom", universities_[uni_zipf_.draw(rng_)]);
                    professors.push_back(f);
                }
                faculty.push_back(f);
            }
        add(professors.front(), "headOf", dept);
        // Every course gets a teacher; the rest of the load is skewed.
        const ZipfTable fz(faculty.size(), c_.skew);
        for (std::size_t i = 0; i < courses.size(); ++i) add(faculty[i % faculty.size()], "teacherOf", courses[i]);
        for (std::size_t i = 0; i < grad_courses.size(); ++i)
            add(professors[fz.draw(rng_) % professors.size()], "teacherOf", grad_courses[i]);

        const ZipfTable cz(courses.size(), c_.skew), gz(grad_courses.size(), c_.skew), pz(professors.size(), c_.skew);
        std::vector<NodeId> grads;
        for (std::size_t i = 0, n = scaled(10, 20); i < n; ++i) {
            const std::string id = ds + "/GraduateStudent" + std::to_string(i);
            const auto s = node(id);
            person(s, id, "GraduateStudent", dept, "memberOf");
            add(s, "undergraduateDegreeFrom", universities_[uni_zipf_.draw(rng_)]);
            add(s, "advisor", professors[pz.draw(rng_)]);
            for (std::size_t t = 0, m = between(1, 3); t < m; ++t) add(s, "takesCourse", grad_courses[gz.draw(rng_)]);
            if (chance(0.25)) add(s, "teachingAssistantOf", courses[cz.draw(rng_)]);
            grads.push_back(s);
        }
        for (std::size_t i = 0, n = scaled(30, 60); i < n; ++i) {
            const std::string id = ds + "/UndergraduateStudent" + std::to_string(i);
            const auto s = node(id);
            person(s, id, "UndergraduateStudent", dept, "memberOf");
            for (std::size_t t = 0, m = between(2, 4); t < m; ++t) add(s, "takesCourse", courses[cz.draw(rng_)]);
            if (chance(0.2)) add(s, "advisor", professors[pz.draw(rng_)]);
        }

        // Publication counts follow author popularity.
        const ZipfTable az(faculty.size(), c_.skew);
        const ZipfTable sz(grads.size(), c_.skew);
        for (std::size_t i = 0, n = scaled(20, 40); i < n; ++i) {
            const auto pub = node(ds + "/Publication" + std::to_string(i));
            add(pub, "type", cls("Publication"));
            add(pub, "name", literal(ds + " Publication " + std::to_string(i)));
            add(pub, "publicationAuthor", faculty[az.draw(rng_)]);
            if (chance(0.5)) add(pub, "publicationAuthor", grads[sz.draw(rng_)]);
        }
        for (auto g : grads)
            if (chance(0.3)) add(g, "memberOf", groups[uniform_below(rng_, groups.size())]);
    }

    const UniversityKgConfig &c_;
    Rng rng_;
    ZipfTable uni_zipf_;
    ZipfTable topic_zipf_{40, 1.0};
    Dictionary nodes_, preds_;
    std::vector<Triple> triples_;
    std::vector<NodeId> universities_;
};

} // namespace

KnowledgeGraph generate_university_kg(const UniversityKgConfig &config) {
    if (config.departments_per_university < 1 || config.university_pool < 1)
        throw Error(ErrorCode::invalid_argument, "university generator needs positive pool sizes");
    return UniversityBuilder(config).build();
}

} // namespace lmkg
