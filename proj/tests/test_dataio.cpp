#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>
#include <set>

#include "pkgenex/dataio.hpp"
#include "pkgenex/predictor.hpp"
#include "pkgenex/rng.hpp"
#include "pkgenex/synth.hpp"

using namespace pkgenex;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("pkgenex_test_" + std::to_string(Rng(::getpid()).next_u64()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace

TEST_CASE("expression TSV round trip") {
    TempDir tmp;
    write_file(tmp.file("e.tsv"),
               "sample_id\tpatient_id\tg1\tg2\tg3\n"
               "s1\tp1\t1\t2\t3\n"
               "s2\tp2\t4\t5\t6\n");
    const auto expr = dataio::load_expression_matrix(tmp.file("e.tsv"));
    CHECK(expr.values.rows() == 2);
    CHECK(expr.values.cols() == 3);
    CHECK(expr.gene_ids == std::vector<std::string>{"g1", "g2", "g3"});
    CHECK(expr.values(0, 0) == 1.0);
    CHECK(expr.values(1, 2) == 6.0);

    dataio::save_expression_matrix(expr, tmp.file("e2.tsv"));
    const auto again = dataio::load_expression_matrix(tmp.file("e2.tsv"));
    CHECK(again.values == expr.values);
    CHECK(again.sample_ids == expr.sample_ids);
}

TEST_CASE("expression validation errors") {
    TempDir tmp;
    SUBCASE("duplicate gene column") {
        write_file(tmp.file("e.tsv"),
                   "sample_id\tpatient_id\tTP53\tTP53\n"
                   "s1\tp1\t1\t2\n");
        CHECK_THROWS(dataio::load_expression_matrix(tmp.file("e.tsv")));
    }
    SUBCASE("negative value") {
        write_file(tmp.file("e.tsv"),
                   "sample_id\tpatient_id\tg1\ns1\tp1\t-1\n");
        CHECK_THROWS(dataio::load_expression_matrix(tmp.file("e.tsv")));
    }
    SUBCASE("malformed row length reports line number") {
        write_file(tmp.file("e.tsv"),
                   "sample_id\tpatient_id\tg1\tg2\n"
                   "s1\tp1\t1\t2\n"
                   "s2\tp2\t3\n");
        try {
            dataio::load_expression_matrix(tmp.file("e.tsv"));
            FAIL("expected parse error");
        } catch (const std::exception& e) {
            CHECK(std::string(e.what()).find(":3") != std::string::npos);
        }
    }
}

TEST_CASE("synthetic write-then-read round trip is bitwise") {
    synth::SynthConfig cfg;
    cfg.n_patients = 100;
    cfg.n_genes = 500;
    cfg.n_modules = 5;
    cfg.genes_per_module = 10;
    cfg.seed = 11;
    const auto data = synth::generate_dataset(cfg);
    TempDir tmp;
    dataio::save_expression_matrix(data.expression, tmp.file("e.tsv"));
    const auto again = dataio::load_expression_matrix(tmp.file("e.tsv"));
    CHECK(again.values == data.expression.values);  // %.17g survives f64 exactly
}

TEST_CASE("edge list dedup and orientation") {
    TempDir tmp;
    write_file(tmp.file("g.tsv"), "A\tB\nB\tA\nB\tC\n");
    const auto g = dataio::load_graph_edgelist(tmp.file("g.tsv"));
    CHECK(g.gene_ids == std::vector<std::string>{"A", "B", "C"});
    REQUIRE(g.edges.size() == 2);
    CHECK(g.edges[0] == std::make_pair(0u, 1u));
    CHECK(g.edges[1] == std::make_pair(1u, 2u));
}

TEST_CASE("edge list errors") {
    TempDir tmp;
    write_file(tmp.file("g.tsv"), "A\tA\n");
    CHECK_THROWS(dataio::load_graph_edgelist(tmp.file("g.tsv")));
    write_file(tmp.file("g2.tsv"), "A\n");
    CHECK_THROWS(dataio::load_graph_edgelist(tmp.file("g2.tsv")));
}

TEST_CASE("edge list round trip with weights and comments") {
    TempDir tmp;
    write_file(tmp.file("g.tsv"), "# comment\nA\tB\t0.9\nC\tB\t-0.95\n");
    const auto g = dataio::load_graph_edgelist(tmp.file("g.tsv"));
    REQUIRE(g.has_weights());
    dataio::save_graph_edgelist(g, tmp.file("g2.tsv"));
    const auto again = dataio::load_graph_edgelist(tmp.file("g2.tsv"));
    CHECK(again.edges == g.edges);
    CHECK(again.weights == g.weights);
}

TEST_CASE("PKMX matrix round trip is bitwise") {
    Rng rng(3);
    Matrix m(7, 5);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.normal();
    TempDir tmp;
    dataio::save_matrix(m, tmp.file("m.pkmx"));
    const auto again = dataio::load_matrix(tmp.file("m.pkmx"));
    CHECK(again == m);
    write_file(tmp.file("bad.pkmx"), "not a matrix");
    CHECK_THROWS(dataio::load_matrix(tmp.file("bad.pkmx")));
}

TEST_CASE("make_folds honors 72/8/20 and partitions patients") {
    std::vector<std::string> patients;
    for (int i = 0; i < 100; ++i) patients.push_back("p" + std::to_string(i));
    const auto spec = dataio::make_folds(patients, 5, 0.72, 0.08, 0.20, 42);
    std::set<std::string> tested;
    for (int f = 0; f < 5; ++f) {
        int tr = 0, va = 0, te = 0;
        for (const auto& [p, s] : spec.assignments[f]) {
            if (s == Split::train) ++tr;
            if (s == Split::val) ++va;
            if (s == Split::test) {
                ++te;
                CHECK(tested.insert(p).second);
            }
        }
        CHECK(tr == 72);
        CHECK(va == 8);
        CHECK(te == 20);
    }
    CHECK(tested.size() == 100);
}

TEST_CASE("make_folds determinism and seed sensitivity") {
    std::vector<std::string> patients;
    for (int i = 0; i < 100; ++i) patients.push_back("p" + std::to_string(i));
    const auto a = dataio::make_folds(patients, 5, 0.72, 0.08, 0.20, 42);
    const auto b = dataio::make_folds(patients, 5, 0.72, 0.08, 0.20, 42);
    CHECK(a.assignments == b.assignments);
    const auto c = dataio::make_folds(patients, 5, 0.72, 0.08, 0.20, 43);
    CHECK(a.assignments != c.assignments);
}

TEST_CASE("make_folds rejects fewer patients than folds") {
    CHECK_THROWS(dataio::make_folds({"a", "b", "c"}, 5, 0.72, 0.08, 0.20, 0));
}

TEST_CASE("fold spec file round trip") {
    std::vector<std::string> patients;
    for (int i = 0; i < 23; ++i) patients.push_back("p" + std::to_string(i));
    const auto spec = dataio::make_folds(patients, 4, 0.7, 0.05, 0.25, 9);
    TempDir tmp;
    dataio::save_fold_spec(spec, tmp.file("folds.tsv"));
    const auto again = dataio::load_fold_spec(tmp.file("folds.tsv"));
    CHECK(again.assignments == spec.assignments);
    CHECK(again.seed == spec.seed);
}

TEST_CASE("align_gene_universe induced subgraph") {
    TempDir tmp;
    write_file(tmp.file("g.tsv"), "A\tB\nB\tC\n");
    const auto g = dataio::load_graph_edgelist(tmp.file("g.tsv"));
    SUBCASE("drops edges leaving the universe") {
        const auto sub = dataio::align_gene_universe(g, {"A", "B"});
        REQUIRE(sub.edges.size() == 1);
        CHECK(sub.gene_ids == std::vector<std::string>{"A", "B"});
    }
    SUBCASE("disjoint universe gives the empty graph") {
        const auto sub = dataio::align_gene_universe(g, {"X", "Y"});
        CHECK(sub.edges.empty());
        CHECK(sub.gene_ids.empty());
    }
}

TEST_CASE("align_gene_universe equals brute-force filter on random graphs") {
    Rng rng(17);
    std::vector<std::string> genes;
    for (int i = 0; i < 50; ++i) genes.push_back("g" + std::to_string(100 + i));
    CoexpressionGraph g;
    g.gene_ids = genes;
    for (std::uint32_t i = 0; i < 50; ++i)
        for (std::uint32_t j = i + 1; j < 50; ++j)
            if (rng.uniform() < 0.1) g.edges.emplace_back(i, j);

    std::vector<std::string> universe;
    for (int i = 0; i < 50; ++i)
        if (rng.uniform() < 0.6) universe.push_back(genes[i]);
    universe.resize(std::min<std::size_t>(universe.size(), 30));

    const auto sub = dataio::align_gene_universe(g, universe);

    std::set<std::pair<std::string, std::string>> expected;
    std::set<std::string> allowed(universe.begin(), universe.end());
    for (const auto& e : g.edges) {
        const auto &a = genes[e.first], &b = genes[e.second];
        if (allowed.count(a) && allowed.count(b)) expected.emplace(a, b);
    }
    std::set<std::pair<std::string, std::string>> got;
    for (const auto& e : sub.edges)
        got.emplace(sub.gene_ids[e.first], sub.gene_ids[e.second]);
    CHECK(got == expected);
}

TEST_CASE("model artifact round trip") {
    Rng rng(5);
    predictor::PkLinearHead head = predictor::make_plain_head(6, 3);
    for (Eigen::Index i = 0; i < 6; ++i) {
        head.b[i] = rng.normal();
        for (Eigen::Index j = 0; j < 3; ++j) {
            head.A(i, j) = rng.normal();
            head.G(i, j) = rng.uniform();
        }
    }
    head.lambda = 0.5;
    head.clamp_output = false;
    TempDir tmp;
    dataio::save_head(head, 0xabcdef, tmp.file("m.pkmh"));
    std::uint64_t hash = 0;
    const auto again = dataio::load_head(tmp.file("m.pkmh"), &hash);
    CHECK(hash == 0xabcdef);
    CHECK(again.A == head.A);
    CHECK(again.b == head.b);
    CHECK(again.G == head.G);
    CHECK(again.lambda == head.lambda);
    CHECK(again.clamp_output == head.clamp_output);
}
