#include "pkgenex/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "pkgenex/coexpr.hpp"
#include "pkgenex/dataio.hpp"
#include "pkgenex/nmf.hpp"
#include "pkgenex/rng.hpp"

namespace fs = std::filesystem;

namespace pkgenex::experiment {

const char* pk_source_name(PkSource s) {
    switch (s) {
        case PkSource::none: return "none";
        case PkSource::internal: return "internal";
        case PkSource::external: return "external";
        default: return "combined";
    }
}

void ExperimentConfig::validate() const {
    auto require_file = [](const std::string& p, const char* what) {
        if (p.empty()) throw std::invalid_argument(std::string(what) + " path not set");
        if (!fs::exists(p))
            throw std::invalid_argument(std::string(what) + " file missing: " + p);
    };
    require_file(expression_path, "expression");
    require_file(embeddings_path, "embeddings");
    require_file(embedding_ids_path, "embedding ids");
    bool needs_external = false;
    for (PkSource s : sources)
        if (s == PkSource::external || s == PkSource::combined) needs_external = true;
    if (needs_external) require_file(external_graph_path, "external graph");
    if (out_dir.empty()) throw std::invalid_argument("output directory not set");
    if (!(tau > 0.0 && tau < 1.0))
        throw std::invalid_argument("tau must be in (0,1)");
    train.validate();
}

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_report_tsv(const EvalReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "gene_id\tr\tp\tq\tsignificant\tbaseline_r\n";
    for (std::size_t g = 0; g < rep.gene_ids.size(); ++g) {
        out << rep.gene_ids[g] << '\t' << format_double(rep.per_gene_r[g]) << '\t'
            << format_double(rep.per_gene_p[g]) << '\t'
            << format_double(rep.per_gene_q[g]) << '\t'
            << (rep.significant[g] ? 1 : 0) << '\t'
            << format_double(rep.baseline_r[g]) << '\n';
    }
    out << "# n_significant\t" << rep.n_significant << "\tlambda\t"
        << format_double(rep.lambda_used) << '\n';
}

void write_history_tsv(const train_eval::TrainHistory& hist, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "epoch\ttrain_mse\tval_pearson\n";
    for (const auto& e : hist.epochs)
        out << e.epoch << '\t' << format_double(e.train_mse) << '\t'
            << format_double(e.val_pearson) << '\n';
}

struct StageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        throw StageError(std::string("[") + name + "] " + e.what());
    }
}

}  // namespace

std::uint64_t file_content_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    return h;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    ExperimentConfig cfg;
    cfg.sources.clear();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        std::string value;
        std::getline(ss, value);
        value.erase(0, value.find_first_not_of(" \t"));
        auto bad = [&](const char* why) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + why);
        };
        try {
            if (key == "expression") cfg.expression_path = value;
            else if (key == "embeddings") cfg.embeddings_path = value;
            else if (key == "embedding_ids") cfg.embedding_ids_path = value;
            else if (key == "external_graph") cfg.external_graph_path = value;
            else if (key == "out_dir") cfg.out_dir = value;
            else if (key == "tau") cfg.tau = std::stod(value);
            else if (key == "block") cfg.block = std::stol(value);
            else if (key == "nmf_max_iter") cfg.nmf_max_iter = std::stoi(value);
            else if (key == "nmf_tol") cfg.nmf_tol = std::stod(value);
            else if (key == "alpha") cfg.alpha = std::stod(value);
            else if (key == "n_folds") cfg.n_folds = std::stoi(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "learning_rate") cfg.train.learning_rate = std::stod(value);
            else if (key == "batch_size") cfg.train.batch_size = std::stoi(value);
            else if (key == "max_epochs") cfg.train.max_epochs = std::stoi(value);
            else if (key == "patience") cfg.train.patience = std::stoi(value);
            else if (key == "optimizer") {
                if (value == "adam") cfg.train.optimizer = train_eval::Optimizer::adam;
                else if (value == "sgd") cfg.train.optimizer = train_eval::Optimizer::sgd;
                else bad("unknown optimizer");
            } else if (key == "lambda_grid") {
                cfg.lambda_grid.clear();
                std::replace(value.begin(), value.end(), ',', ' ');
                std::istringstream vs(value);
                double l;
                while (vs >> l) cfg.lambda_grid.push_back(l);
            } else if (key == "sources") {
                std::replace(value.begin(), value.end(), ',', ' ');
                std::istringstream vs(value);
                std::string s;
                while (vs >> s) {
                    if (s == "internal") cfg.sources.push_back(PkSource::internal);
                    else if (s == "external") cfg.sources.push_back(PkSource::external);
                    else if (s == "combined") cfg.sources.push_back(PkSource::combined);
                    else bad("unknown PK source");
                }
            } else if (key == "ratios") {
                std::istringstream vs(value);
                vs >> cfg.train_ratio >> cfg.val_ratio >> cfg.test_ratio;
            } else {
                bad(("unknown key '" + key + "'").c_str());
            }
        } catch (const std::invalid_argument&) {
            bad("cannot parse value");
        }
    }
    if (cfg.sources.empty()) cfg.sources = {PkSource::internal};
    return cfg;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);

    auto expr = stage("load-expression", [&] {
        return dataio::load_expression_matrix(cfg.expression_path);
    });
    auto table = stage("load-embeddings", [&] {
        return dataio::load_embedding_table(cfg.embeddings_path,
                                            cfg.embedding_ids_path);
    });

    // Align embedding rows to expression sample order.
    std::unordered_map<std::string, Eigen::Index> emb_row;
    for (std::size_t i = 0; i < table.sample_ids.size(); ++i)
        emb_row[table.sample_ids[i]] = static_cast<Eigen::Index>(i);
    Matrix w_all(expr.n_samples(), table.dim);
    for (std::size_t i = 0; i < expr.n_samples(); ++i) {
        auto it = emb_row.find(expr.sample_ids[i]);
        if (it == emb_row.end())
            throw StageError("[load-embeddings] no embedding for sample " +
                             expr.sample_ids[i]);
        w_all.row(i) = table.vectors.row(it->second);
    }

    CoexpressionGraph external;
    bool have_external = false;
    for (PkSource s : cfg.sources)
        if (s == PkSource::external || s == PkSource::combined) have_external = true;
    if (have_external) {
        external = stage("load-external-graph", [&] {
            return dataio::align_gene_universe(
                dataio::load_graph_edgelist(cfg.external_graph_path), expr.gene_ids);
        });
    }

    auto folds = stage("make-folds", [&] {
        return dataio::make_folds(expr.patient_ids, cfg.n_folds, cfg.train_ratio,
                                  cfg.val_ratio, cfg.test_ratio, cfg.seed);
    });
    dataio::save_fold_spec(folds, (fs::path(cfg.out_dir) / "folds.tsv").string());

    ExperimentResult result;
    for (int f = 0; f < cfg.n_folds; ++f) {
        std::vector<std::size_t> train_rows, val_rows, test_rows, trainval_rows;
        for (std::size_t i = 0; i < expr.n_samples(); ++i) {
            switch (folds.split_of(f, expr.patient_ids[i])) {
                case Split::train: train_rows.push_back(i); break;
                case Split::val: val_rows.push_back(i); break;
                case Split::test: test_rows.push_back(i); break;
            }
        }
        trainval_rows = train_rows;
        trainval_rows.insert(trainval_rows.end(), val_rows.begin(), val_rows.end());
        std::sort(trainval_rows.begin(), trainval_rows.end());

        auto take = [&](const std::vector<std::size_t>& rows, const Matrix& src) {
            Matrix out(rows.size(), src.cols());
            for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = src.row(rows[i]);
            return out;
        };
        train_eval::FoldData fold;
        fold.w_train = take(train_rows, w_all);
        fold.y_train = take(train_rows, expr.values);
        fold.w_val = take(val_rows, w_all);
        fold.y_val = take(val_rows, expr.values);
        fold.w_test = take(test_rows, w_all);
        fold.y_test = take(test_rows, expr.values);
        fold.gene_ids = expr.gene_ids;

        CoexpressionGraph internal_graph;
        bool have_internal = false;
        for (PkSource src : cfg.sources) {
            if (src == PkSource::internal || src == PkSource::combined) {
                if (!have_internal) {
                    coexpr::BuildOptions opt;
                    opt.tau = cfg.tau;
                    opt.block = cfg.block;
                    internal_graph = stage("build-graph", [&] {
                        return coexpr::build_graph_rows(expr, trainval_rows, opt);
                    });
                    have_internal = true;
                }
            }
        }

        const fs::path fold_dir = fs::path(cfg.out_dir) / ("fold" + std::to_string(f));
        fs::create_directories(fold_dir);

        for (PkSource src : cfg.sources) {
            CoexpressionGraph graph;
            switch (src) {
                case PkSource::internal: graph = internal_graph; break;
                case PkSource::external: graph = external; break;
                case PkSource::combined:
                    graph = coexpr::union_graphs(external, internal_graph);
                    break;
                case PkSource::none: break;
            }
            const std::string tag = pk_source_name(src);
            dataio::save_graph_edgelist(graph,
                                        (fold_dir / (tag + "_graph.tsv")).string());
            const auto stats = coexpr::graph_stats(graph);

            auto adj = stage("adjacency", [&] {
                return nmf::adjacency_from_graph(graph, expr.gene_ids);
            });
            nmf::FactorizeOptions nopt;
            nopt.max_iter = cfg.nmf_max_iter;
            nopt.tol = cfg.nmf_tol;
            nopt.seed = Rng::derive(cfg.seed, 500 + 10 * f + static_cast<int>(src));
            auto emb = stage("embed", [&] { return nmf::factorize(adj, table.dim, nopt); });
            dataio::save_matrix(emb.G, (fold_dir / (tag + "_G.pkmx")).string());
            dataio::save_id_list(emb.gene_ids,
                                 (fold_dir / (tag + "_genes.txt")).string());

            train_eval::TrainConfig tcfg = cfg.train;
            tcfg.seed = Rng::derive(cfg.seed, 9000 + 10 * f + static_cast<int>(src));
            train_eval::SweepOptions sopt;
            sopt.alpha = cfg.alpha;
            auto sweep = stage("sweep", [&] {
                return train_eval::lambda_sweep(fold, emb.G, cfg.lambda_grid, tcfg, sopt);
            });

            for (std::size_t li = 0; li < sweep.lambdas.size(); ++li) {
                const std::string lam = format_double(sweep.lambdas[li]);
                write_report_tsv(sweep.reports[li],
                                 (fold_dir / (tag + "_lambda" + lam + "_report.tsv"))
                                     .string());
                write_history_tsv(sweep.histories[li],
                                  (fold_dir / (tag + "_lambda" + lam + "_history.tsv"))
                                      .string());
            }

            FoldSummary fsum;
            fsum.fold = f;
            fsum.source = src;
            fsum.lambda0_significant = sweep.reports[0].n_significant;
            fsum.best_lambda = sweep.selected_lambda;
            fsum.best_significant = sweep.reports[sweep.selected_index].n_significant;
            fsum.graph_genes = stats.n_genes_in_network;
            fsum.graph_pairs = stats.n_pairs;
            result.fold_summaries.push_back(fsum);
        }
    }

    // Summary table: one row per (source, fold) plus per-source aggregates.
    const fs::path summary_path = fs::path(cfg.out_dir) / "summary.tsv";
    {
        std::ofstream out(summary_path);
        out << "source\tfold\tgraph_genes\tgraph_pairs\tn_significant_lambda0\t"
               "best_lambda\tn_significant_best\n";
        for (const auto& s : result.fold_summaries)
            out << pk_source_name(s.source) << '\t' << s.fold << '\t' << s.graph_genes
                << '\t' << s.graph_pairs << '\t' << s.lambda0_significant << '\t'
                << format_double(s.best_lambda) << '\t' << s.best_significant << '\n';
        for (PkSource src : cfg.sources) {
            long base = 0, best = 0;
            int count = 0;
            for (const auto& s : result.fold_summaries)
                if (s.source == src) {
                    base += s.lambda0_significant;
                    best += s.best_significant;
                    ++count;
                }
            if (count > 0)
                out << pk_source_name(src) << "\tmean\t-\t-\t"
                    << format_double(static_cast<double>(base) / count) << "\t-\t"
                    << format_double(static_cast<double>(best) / count) << '\n';
        }
    }
    result.summary_path = summary_path.string();

    // Manifest: input content hashes and the seed, for reproducibility checks.
    {
        std::ofstream out(fs::path(cfg.out_dir) / "manifest.tsv");
        out << "seed\t" << cfg.seed << '\n';
        out << "expression\t" << std::hex << file_content_hash(cfg.expression_path)
            << std::dec << '\n';
        out << "embeddings\t" << std::hex << file_content_hash(cfg.embeddings_path)
            << std::dec << '\n';
        if (!cfg.external_graph_path.empty() && fs::exists(cfg.external_graph_path))
            out << "external_graph\t" << std::hex
                << file_content_hash(cfg.external_graph_path) << std::dec << '\n';
    }
    return result;
}

}  // namespace pkgenex::experiment
