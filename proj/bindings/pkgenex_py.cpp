#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pkgenex/coexpr.hpp"
#include "pkgenex/dataio.hpp"
#include "pkgenex/embedqc.hpp"
#include "pkgenex/experiment.hpp"
#include "pkgenex/nmf.hpp"
#include "pkgenex/predictor.hpp"
#include "pkgenex/synth.hpp"
#include "pkgenex/train_eval.hpp"

namespace py = pybind11;
using namespace pkgenex;

namespace {

ExpressionMatrix to_expression(const Matrix& values,
                               const std::vector<std::string>& gene_ids,
                               const std::vector<std::string>& sample_ids,
                               const std::vector<std::string>& patient_ids) {
    ExpressionMatrix expr;
    expr.values = values;
    expr.gene_ids = gene_ids;
    if (sample_ids.empty()) {
        for (Eigen::Index i = 0; i < values.rows(); ++i)
            expr.sample_ids.push_back("s" + std::to_string(i));
    } else {
        expr.sample_ids = sample_ids;
    }
    if (patient_ids.empty()) {
        expr.patient_ids = expr.sample_ids;
    } else {
        expr.patient_ids = patient_ids;
    }
    expr.validate();
    return expr;
}

}  // namespace

PYBIND11_MODULE(_pkgenex, m) {
    m.doc() = "Co-expression prior-knowledge injection for expression predictors";

    py::class_<CoexpressionGraph>(m, "CoexpressionGraph")
        .def(py::init<>())
        .def_readonly("gene_ids", &CoexpressionGraph::gene_ids)
        .def_readonly("edges", &CoexpressionGraph::edges)
        .def_readonly("weights", &CoexpressionGraph::weights)
        .def("__len__", [](const CoexpressionGraph& g) { return g.edges.size(); });

    py::class_<GeneEmbeddings>(m, "GeneEmbeddings")
        .def_readonly("G", &GeneEmbeddings::G)
        .def_readonly("gene_ids", &GeneEmbeddings::gene_ids)
        .def_readonly("d", &GeneEmbeddings::d)
        .def_readonly("final_loss", &GeneEmbeddings::final_loss)
        .def_readonly("iterations_run", &GeneEmbeddings::iterations_run);

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("gene_ids", &EvalReport::gene_ids)
        .def_readonly("per_gene_r", &EvalReport::per_gene_r)
        .def_readonly("per_gene_p", &EvalReport::per_gene_p)
        .def_readonly("per_gene_q", &EvalReport::per_gene_q)
        .def_readonly("significant", &EvalReport::significant)
        .def_readonly("n_significant", &EvalReport::n_significant)
        .def_readonly("lambda_used", &EvalReport::lambda_used);

    m.def(
        "generate_dataset",
        [](int n_patients, int n_genes, int n_modules, int genes_per_module,
           int latent_dim, int embed_dim, double expression_noise,
           double embedding_noise, std::uint64_t seed) {
            synth::SynthConfig cfg;
            cfg.n_patients = n_patients;
            cfg.n_genes = n_genes;
            cfg.n_modules = n_modules;
            cfg.genes_per_module = genes_per_module;
            cfg.latent_dim = latent_dim;
            cfg.embed_dim = embed_dim;
            cfg.expression_noise = expression_noise;
            cfg.embedding_noise = embedding_noise;
            cfg.seed = seed;
            const auto data = synth::generate_dataset(cfg);
            const auto truth = synth::true_graph(cfg);
            return py::make_tuple(data.expression.values, data.expression.gene_ids,
                                  data.expression.sample_ids,
                                  data.expression.patient_ids,
                                  data.embeddings.vectors, truth);
        },
        py::arg("n_patients") = 100, py::arg("n_genes") = 500,
        py::arg("n_modules") = 10, py::arg("genes_per_module") = 20,
        py::arg("latent_dim") = 10, py::arg("embed_dim") = 32,
        py::arg("expression_noise") = 0.1, py::arg("embedding_noise") = 0.1,
        py::arg("seed") = 0,
        "Synthetic dataset: (expression, gene_ids, sample_ids, patient_ids, "
        "embeddings, true_graph)");

    m.def(
        "build_graph",
        [](const Matrix& values, const std::vector<std::string>& gene_ids,
           double tau, Eigen::Index block, bool absolute) {
            coexpr::BuildOptions opt;
            opt.tau = tau;
            opt.block = block;
            opt.mode = absolute ? coexpr::ThresholdMode::absolute
                                : coexpr::ThresholdMode::signed_corr;
            return coexpr::build_graph(to_expression(values, gene_ids, {}, {}), opt);
        },
        py::arg("values"), py::arg("gene_ids"), py::arg("tau") = 0.85,
        py::arg("block") = 1024, py::arg("absolute") = false,
        "Thresholded Pearson co-expression graph over expression columns");

    m.def(
        "factorize_graph",
        [](const CoexpressionGraph& graph, const std::vector<std::string>& universe,
           Eigen::Index d, int max_iter, double tol, std::uint64_t seed) {
            const auto adj = nmf::adjacency_from_graph(graph, universe);
            nmf::FactorizeOptions opt;
            opt.max_iter = max_iter;
            opt.tol = tol;
            opt.seed = seed;
            return nmf::factorize(adj, d, opt);
        },
        py::arg("graph"), py::arg("universe"), py::arg("d"),
        py::arg("max_iter") = 500, py::arg("tol") = 1e-5, py::arg("seed") = 0,
        "NMF gene embeddings of the graph adjacency over a gene universe");

    m.def(
        "np_score",
        [](const CoexpressionGraph& graph, const GeneEmbeddings& emb, int k) {
            const auto adj = nmf::adjacency_from_graph(graph, emb.gene_ids);
            return embedqc::np_score(adj, emb, k).np_score;
        },
        py::arg("graph"), py::arg("embeddings"), py::arg("k") = 100,
        "Mean top-k neighborhood preservation between graph and embedding space");

    m.def("bh_adjust", &train_eval::bh_adjust, py::arg("p"),
          "Benjamini-Hochberg step-up adjusted values");

    m.def(
        "per_gene_pearson",
        [](const Matrix& pred, const Matrix& truth) {
            const auto res = train_eval::per_gene_pearson(pred, truth);
            return py::make_tuple(res.r, res.p);
        },
        py::arg("pred"), py::arg("truth"),
        "Per-column Pearson r and two-sided p-values");

    m.def(
        "lambda_sweep",
        [](const Matrix& w_train, const Matrix& y_train, const Matrix& w_val,
           const Matrix& y_val, const Matrix& w_test, const Matrix& y_test,
           const std::vector<std::string>& gene_ids, const Matrix& G,
           const std::vector<double>& grid, double learning_rate, int max_epochs,
           int patience, double alpha, std::uint64_t seed) {
            train_eval::FoldData fold;
            fold.w_train = w_train;
            fold.y_train = y_train;
            fold.w_val = w_val;
            fold.y_val = y_val;
            fold.w_test = w_test;
            fold.y_test = y_test;
            fold.gene_ids = gene_ids;
            train_eval::TrainConfig cfg;
            cfg.learning_rate = learning_rate;
            cfg.max_epochs = max_epochs;
            cfg.patience = patience;
            cfg.seed = seed;
            train_eval::SweepOptions opt;
            opt.alpha = alpha;
            const auto sweep = train_eval::lambda_sweep(fold, G, grid, cfg, opt);
            return py::make_tuple(sweep.lambdas, sweep.reports,
                                  sweep.selected_lambda, sweep.selected_index);
        },
        py::arg("w_train"), py::arg("y_train"), py::arg("w_val"), py::arg("y_val"),
        py::arg("w_test"), py::arg("y_test"), py::arg("gene_ids"), py::arg("G"),
        py::arg("grid"), py::arg("learning_rate") = 1e-3,
        py::arg("max_epochs") = 200, py::arg("patience") = 20,
        py::arg("alpha") = 0.05, py::arg("seed") = 0,
        "Train one head per lambda (0 included) and pick the best by "
        "n_significant: (lambdas, reports, selected_lambda, selected_index)");

    m.def(
        "run_experiment",
        [](const std::string& config_path) {
            const auto cfg = experiment::load_experiment_config(config_path);
            const auto res = experiment::run_experiment(cfg);
            py::list rows;
            for (const auto& s : res.fold_summaries) {
                py::dict row;
                row["source"] = experiment::pk_source_name(s.source);
                row["fold"] = s.fold;
                row["n_significant_lambda0"] = s.lambda0_significant;
                row["best_lambda"] = s.best_lambda;
                row["n_significant_best"] = s.best_significant;
                rows.append(row);
            }
            return py::make_tuple(res.summary_path, rows);
        },
        py::arg("config_path"),
        "Full cross-validated experiment from a config file: "
        "(summary_path, fold_rows)");
}
