#include "pkgenex/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "pkgenex/predictor.hpp"
#include "pkgenex/rng.hpp"

namespace pkgenex {

void ExpressionMatrix::validate() const {
    if (static_cast<std::size_t>(values.rows()) != sample_ids.size())
        throw std::invalid_argument("expression: row count != sample count");
    if (static_cast<std::size_t>(values.cols()) != gene_ids.size())
        throw std::invalid_argument("expression: column count != gene count");
    if (patient_ids.size() != sample_ids.size())
        throw std::invalid_argument("expression: patient ids not aligned to samples");
    std::unordered_set<std::string> seen;
    for (const auto& g : gene_ids)
        if (!seen.insert(g).second)
            throw std::invalid_argument("expression: duplicate gene id '" + g + "'");
    seen.clear();
    for (const auto& s : sample_ids)
        if (!seen.insert(s).second)
            throw std::invalid_argument("expression: duplicate sample id '" + s + "'");
    for (Eigen::Index i = 0; i < values.rows(); ++i)
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            const double v = values(i, j);
            if (!std::isfinite(v) || v < 0.0)
                throw std::invalid_argument(
                    "expression: non-finite or negative value at sample " +
                    sample_ids[i] + ", gene " + gene_ids[j]);
        }
}

void EmbeddingTable::validate() const {
    if (static_cast<std::size_t>(vectors.rows()) != sample_ids.size())
        throw std::invalid_argument("embeddings: row count != sample count");
    if (vectors.cols() != dim)
        throw std::invalid_argument("embeddings: column count != dim");
    std::unordered_set<std::string> seen;
    for (const auto& s : sample_ids)
        if (!seen.insert(s).second)
            throw std::invalid_argument("embeddings: duplicate sample id '" + s + "'");
    if (!vectors.allFinite())
        throw std::invalid_argument("embeddings: non-finite value");
}

Split FoldSpec::split_of(int fold, const std::string& patient) const {
    const auto& m = assignments.at(fold);
    auto it = m.find(patient);
    if (it == m.end())
        throw std::invalid_argument("fold spec: unknown patient '" + patient + "'");
    return it->second;
}

void FoldSpec::validate() const {
    if (static_cast<int>(assignments.size()) != n_folds)
        throw std::invalid_argument("fold spec: fold count mismatch");
    if (n_folds < 2) throw std::invalid_argument("fold spec: need >= 2 folds");
    std::set<std::string> universe;
    for (const auto& fold : assignments)
        for (const auto& [p, s] : fold) universe.insert(p);
    std::set<std::string> tested;
    for (const auto& fold : assignments) {
        if (fold.size() != universe.size())
            throw std::invalid_argument("fold spec: patient missing from a fold");
        for (const auto& [p, s] : fold)
            if (s == Split::test && !tested.insert(p).second)
                throw std::invalid_argument("fold spec: patient '" + p +
                                            "' tested in more than one fold");
    }
    if (tested != universe)
        throw std::invalid_argument("fold spec: test splits do not cover all patients");
}

Matrix AdjacencyMatrix::dense() const {
    Matrix m = Matrix::Zero(size(), size());
    for (std::size_t i = 0; i < size(); ++i)
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
            m(i, col_idx[k]) = 1.0;
    return m;
}

namespace dataio {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double(const std::string& tok, const std::string& path, std::size_t lineno) {
    try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument("trailing chars");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": cannot parse number '" + tok + "'");
    }
}

std::string trim_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

void write_double(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

}  // namespace

ExpressionMatrix load_expression_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(path + ": empty file");
    auto header = split_tabs(trim_cr(line));
    if (header.size() < 3 || header[0] != "sample_id" || header[1] != "patient_id")
        throw std::runtime_error(path + ":1: header must start with "
                                 "'sample_id<TAB>patient_id<TAB><gene ids...>'");
    ExpressionMatrix expr;
    expr.gene_ids.assign(header.begin() + 2, header.end());
    const std::size_t n_genes = expr.gene_ids.size();

    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim_cr(line);
        if (line.empty()) continue;
        auto toks = split_tabs(line);
        if (toks.size() != n_genes + 2)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected " + std::to_string(n_genes + 2) +
                                     " fields, got " + std::to_string(toks.size()));
        expr.sample_ids.push_back(toks[0]);
        expr.patient_ids.push_back(toks[1]);
        std::vector<double> vals(n_genes);
        for (std::size_t j = 0; j < n_genes; ++j)
            vals[j] = parse_double(toks[j + 2], path, lineno);
        rows.push_back(std::move(vals));
    }
    expr.values.resize(rows.size(), n_genes);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < n_genes; ++j) expr.values(i, j) = rows[i][j];
    expr.validate();
    return expr;
}

void save_expression_matrix(const ExpressionMatrix& expr, const std::string& path) {
    expr.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "sample_id\tpatient_id";
    for (const auto& g : expr.gene_ids) out << '\t' << g;
    out << '\n';
    for (std::size_t i = 0; i < expr.n_samples(); ++i) {
        out << expr.sample_ids[i] << '\t' << expr.patient_ids[i];
        for (Eigen::Index j = 0; j < expr.values.cols(); ++j) {
            out << '\t';
            write_double(out, expr.values(i, j));
        }
        out << '\n';
    }
}

CoexpressionGraph load_graph_edgelist(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    struct RawEdge {
        std::string a, b;
        bool weighted = false;
        double w = 0.0;
    };
    std::vector<RawEdge> raw;
    std::set<std::string> genes;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim_cr(line);
        if (line.empty() || line[0] == '#') continue;
        auto toks = split_tabs(line);
        if (toks.size() != 2 && toks.size() != 3)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 2 or 3 fields");
        if (toks[0] == toks[1])
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": self-loop on gene '" + toks[0] + "'");
        RawEdge e{toks[0], toks[1]};
        if (toks.size() == 3) {
            e.weighted = true;
            e.w = parse_double(toks[2], path, lineno);
        }
        raw.push_back(std::move(e));
        genes.insert(raw.back().a);
        genes.insert(raw.back().b);
    }
    CoexpressionGraph g;
    g.gene_ids.assign(genes.begin(), genes.end());
    std::unordered_map<std::string, std::uint32_t> index;
    for (std::uint32_t i = 0; i < g.gene_ids.size(); ++i) index[g.gene_ids[i]] = i;

    bool any_weight = false;
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> merged;
    for (const auto& e : raw) {
        std::uint32_t i = index[e.a], j = index[e.b];
        if (i > j) std::swap(i, j);
        any_weight = any_weight || e.weighted;
        auto key = std::make_pair(i, j);
        auto it = merged.find(key);
        if (it == merged.end())
            merged.emplace(key, e.w);
        else if (std::abs(e.w) > std::abs(it->second))
            it->second = e.w;
    }
    for (const auto& [key, w] : merged) {
        g.edges.push_back(key);
        if (any_weight) g.weights.push_back(w);
    }
    return g;
}

void save_graph_edgelist(const CoexpressionGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    if (g.tau) {
        out << "# tau\t";
        write_double(out, *g.tau);
        out << '\n';
    }
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
        out << g.gene_ids[g.edges[k].first] << '\t' << g.gene_ids[g.edges[k].second];
        if (g.has_weights()) {
            out << '\t';
            write_double(out, g.weights[k]);
        }
        out << '\n';
    }
}

void save_matrix(const Matrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    const char magic[4] = {'P', 'K', 'M', 'X'};
    out.write(magic, 4);
    const std::uint16_t version = 1;
    const std::uint64_t rows = m.rows(), cols = m.cols();
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    for (std::uint64_t i = 0; i < rows; ++i)
        for (std::uint64_t j = 0; j < cols; ++j) {
            const double v = m(i, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
}

Matrix load_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "PKMX", 4) != 0)
        throw std::runtime_error(path + ": bad magic, not a PKMX file");
    std::uint16_t version = 0;
    std::uint64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (!in || version != 1)
        throw std::runtime_error(path + ": unsupported PKMX version");
    Matrix m(rows, cols);
    for (std::uint64_t i = 0; i < rows; ++i)
        for (std::uint64_t j = 0; j < cols; ++j) {
            double v;
            in.read(reinterpret_cast<char*>(&v), sizeof(v));
            m(i, j) = v;
        }
    if (!in) throw std::runtime_error(path + ": truncated PKMX file");
    return m;
}

void save_id_list(const std::vector<std::string>& ids, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& id : ids) out << id << '\n';
}

std::vector<std::string> load_id_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        line = trim_cr(line);
        if (!line.empty()) ids.push_back(line);
    }
    return ids;
}

EmbeddingTable load_embedding_table(const std::string& matrix_path,
                                    const std::string& ids_path) {
    EmbeddingTable t;
    t.vectors = load_matrix(matrix_path);
    t.sample_ids = load_id_list(ids_path);
    t.dim = t.vectors.cols();
    t.validate();
    return t;
}

FoldSpec make_folds(const std::vector<std::string>& patient_ids, int n_folds,
                    double train_ratio, double val_ratio, double test_ratio,
                    std::uint64_t seed) {
    if (n_folds < 2) throw std::invalid_argument("make_folds: n_folds must be >= 2");
    if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
        throw std::invalid_argument("make_folds: ratios must sum to 1");
    std::set<std::string> uniq(patient_ids.begin(), patient_ids.end());
    std::vector<std::string> patients(uniq.begin(), uniq.end());
    const std::size_t n = patients.size();
    if (n < static_cast<std::size_t>(n_folds))
        throw std::invalid_argument("make_folds: fewer patients than folds");

    Rng rng(seed);
    rng.shuffle(patients);

    FoldSpec spec;
    spec.n_folds = n_folds;
    spec.seed = seed;
    spec.assignments.resize(n_folds);
    const std::size_t n_val = static_cast<std::size_t>(std::llround(val_ratio * n));
    for (int f = 0; f < n_folds; ++f) {
        // Contiguous chunk of the shuffled order: test sets partition patients.
        const std::size_t lo = f * n / n_folds;
        const std::size_t hi = (f + 1) * n / n_folds;
        std::vector<std::string> rest;
        for (std::size_t i = 0; i < n; ++i) {
            if (i >= lo && i < hi)
                spec.assignments[f][patients[i]] = Split::test;
            else
                rest.push_back(patients[i]);
        }
        Rng fold_rng(Rng::derive(seed, static_cast<std::uint64_t>(f)));
        fold_rng.shuffle(rest);
        for (std::size_t i = 0; i < rest.size(); ++i)
            spec.assignments[f][rest[i]] = i < n_val ? Split::val : Split::train;
    }
    spec.validate();
    return spec;
}

namespace {
const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        default: return "test";
    }
}
}  // namespace

void save_fold_spec(const FoldSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "n_folds\t" << spec.n_folds << '\n';
    out << "seed\t" << spec.seed << '\n';
    for (int f = 0; f < spec.n_folds; ++f) {
        for (Split s : {Split::train, Split::val, Split::test}) {
            out << "fold\t" << f << '\t' << split_name(s);
            for (const auto& [p, ps] : spec.assignments[f])
                if (ps == s) out << '\t' << p;
            out << '\n';
        }
    }
}

FoldSpec load_fold_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    FoldSpec spec;
    spec.assignments.clear();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim_cr(line);
        if (line.empty() || line[0] == '#') continue;
        auto toks = split_tabs(line);
        if (toks[0] == "n_folds" && toks.size() == 2) {
            spec.n_folds = std::stoi(toks[1]);
            spec.assignments.resize(spec.n_folds);
        } else if (toks[0] == "seed" && toks.size() == 2) {
            spec.seed = std::stoull(toks[1]);
        } else if (toks[0] == "fold" && toks.size() >= 3) {
            int f = std::stoi(toks[1]);
            if (f < 0 || f >= static_cast<int>(spec.assignments.size()))
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": fold index out of range");
            Split s;
            if (toks[2] == "train") s = Split::train;
            else if (toks[2] == "val") s = Split::val;
            else if (toks[2] == "test") s = Split::test;
            else
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": unknown split '" + toks[2] + "'");
            for (std::size_t i = 3; i < toks.size(); ++i)
                spec.assignments[f][toks[i]] = s;
        } else {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": unrecognized fold-spec line");
        }
    }
    spec.validate();
    return spec;
}

CoexpressionGraph align_gene_universe(const CoexpressionGraph& graph,
                                      const std::vector<std::string>& genes) {
    std::unordered_set<std::string> allowed(genes.begin(), genes.end());
    CoexpressionGraph out;
    std::set<std::string> kept;
    for (const auto& e : graph.edges) {
        const auto& a = graph.gene_ids[e.first];
        const auto& b = graph.gene_ids[e.second];
        if (allowed.count(a) && allowed.count(b)) {
            kept.insert(a);
            kept.insert(b);
        }
    }
    out.gene_ids.assign(kept.begin(), kept.end());
    out.tau = graph.tau;
    std::unordered_map<std::string, std::uint32_t> index;
    for (std::uint32_t i = 0; i < out.gene_ids.size(); ++i) index[out.gene_ids[i]] = i;
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> merged;
    for (std::size_t k = 0; k < graph.edges.size(); ++k) {
        const auto& a = graph.gene_ids[graph.edges[k].first];
        const auto& b = graph.gene_ids[graph.edges[k].second];
        if (!allowed.count(a) || !allowed.count(b)) continue;
        std::uint32_t i = index[a], j = index[b];
        if (i > j) std::swap(i, j);
        merged.emplace(std::make_pair(i, j),
                       graph.has_weights() ? graph.weights[k] : 0.0);
    }
    for (const auto& [key, w] : merged) {
        out.edges.push_back(key);
        if (graph.has_weights()) out.weights.push_back(w);
    }
    return out;
}

std::uint64_t gene_list_hash(const std::vector<std::string>& ids) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& id : ids) {
        for (unsigned char c : id) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        h ^= 0x1f;  // separator so ["ab","c"] != ["a","bc"]
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

void write_block(std::ostream& os, const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            os.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
}

void read_block(std::istream& is, Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            double v;
            is.read(reinterpret_cast<char*>(&v), sizeof(v));
            m(i, j) = v;
        }
}

}  // namespace

void save_head(const predictor::PkLinearHead& head, std::uint64_t gene_hash,
               const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    const char magic[4] = {'P', 'K', 'M', 'H'};
    out.write(magic, 4);
    const std::uint16_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const double lambda = head.lambda;
    const std::uint8_t clamp = head.clamp_output ? 1 : 0;
    const std::uint64_t n = head.A.rows(), d = head.A.cols();
    out.write(reinterpret_cast<const char*>(&lambda), sizeof(lambda));
    out.write(reinterpret_cast<const char*>(&clamp), sizeof(clamp));
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&d), sizeof(d));
    out.write(reinterpret_cast<const char*>(&gene_hash), sizeof(gene_hash));
    write_block(out, head.A);
    write_block(out, head.b);
    write_block(out, head.G);
}

predictor::PkLinearHead load_head(const std::string& path, std::uint64_t* gene_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "PKMH", 4) != 0)
        throw std::runtime_error(path + ": not a model artifact");
    std::uint16_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != 1) throw std::runtime_error(path + ": unsupported artifact version");
    double lambda = 0.0;
    std::uint8_t clamp = 0;
    std::uint64_t n = 0, d = 0, hash = 0;
    in.read(reinterpret_cast<char*>(&lambda), sizeof(lambda));
    in.read(reinterpret_cast<char*>(&clamp), sizeof(clamp));
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    in.read(reinterpret_cast<char*>(&d), sizeof(d));
    in.read(reinterpret_cast<char*>(&hash), sizeof(hash));
    predictor::PkLinearHead head;
    head.lambda = lambda;
    head.clamp_output = clamp != 0;
    head.A.resize(n, d);
    head.b.resize(n);
    head.G.resize(n, d);
    read_block(in, head.A);
    Matrix b(n, 1);
    read_block(in, b);
    head.b = b.col(0);
    read_block(in, head.G);
    if (!in) throw std::runtime_error(path + ": truncated model artifact");
    if (gene_hash) *gene_hash = hash;
    return head;
}

}  // namespace dataio
}  // namespace pkgenex
