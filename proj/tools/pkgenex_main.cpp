#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <unordered_map>

#include "pkgenex/coexpr.hpp"
#include "pkgenex/dataio.hpp"
#include "pkgenex/embedqc.hpp"
#include "pkgenex/experiment.hpp"
#include "pkgenex/nmf.hpp"
#include "pkgenex/synth.hpp"
#include "pkgenex/train_eval.hpp"

namespace fs = std::filesystem;
using namespace pkgenex;

namespace {

struct SynthArgs {
    synth::SynthConfig cfg;
    std::string out_dir;
    bool write_patches = false;
};

void cmd_synth(const SynthArgs& a) {
    fs::create_directories(a.out_dir);
    const auto data = synth::generate_dataset(a.cfg);
    dataio::save_expression_matrix(data.expression,
                                   (fs::path(a.out_dir) / "expression.tsv").string());
    dataio::save_matrix(data.embeddings.vectors,
                        (fs::path(a.out_dir) / "embeddings.pkmx").string());
    dataio::save_id_list(data.embeddings.sample_ids,
                         (fs::path(a.out_dir) / "samples.txt").string());
    dataio::save_id_list(data.expression.gene_ids,
                         (fs::path(a.out_dir) / "genes.txt").string());
    dataio::save_graph_edgelist(synth::true_graph(a.cfg),
                                (fs::path(a.out_dir) / "true_graph.tsv").string());
    if (a.write_patches) {
        const fs::path dir = fs::path(a.out_dir) / "patches";
        fs::create_directories(dir);
        for (const auto& ps : data.patch_sets)
            dataio::save_matrix(ps.patches, (dir / (ps.sample_id + ".pkmx")).string());
    }
    std::cout << "wrote synthetic dataset: " << data.expression.n_samples()
              << " samples x " << data.expression.n_genes() << " genes\n";
}

train_eval::FoldData assemble_fold(const ExpressionMatrix& expr, const Matrix& w_all,
                                   const FoldSpec& folds, int fold) {
    train_eval::FoldData out;
    std::vector<std::size_t> tr, va, te;
    for (std::size_t i = 0; i < expr.n_samples(); ++i) {
        switch (folds.split_of(fold, expr.patient_ids[i])) {
            case Split::train: tr.push_back(i); break;
            case Split::val: va.push_back(i); break;
            case Split::test: te.push_back(i); break;
        }
    }
    auto take = [&](const std::vector<std::size_t>& rows, const Matrix& src) {
        Matrix m(rows.size(), src.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) m.row(i) = src.row(rows[i]);
        return m;
    };
    out.w_train = take(tr, w_all);
    out.y_train = take(tr, expr.values);
    out.w_val = take(va, w_all);
    out.y_val = take(va, expr.values);
    out.w_test = take(te, w_all);
    out.y_test = take(te, expr.values);
    out.gene_ids = expr.gene_ids;
    return out;
}

Matrix aligned_embeddings(const ExpressionMatrix& expr, const EmbeddingTable& table) {
    std::unordered_map<std::string, Eigen::Index> row;
    for (std::size_t i = 0; i < table.sample_ids.size(); ++i)
        row[table.sample_ids[i]] = static_cast<Eigen::Index>(i);
    Matrix w(expr.n_samples(), table.dim);
    for (std::size_t i = 0; i < expr.n_samples(); ++i) {
        auto it = row.find(expr.sample_ids[i]);
        if (it == row.end())
            throw std::runtime_error("no embedding for sample " + expr.sample_ids[i]);
        w.row(i) = table.vectors.row(it->second);
    }
    return w;
}

void write_report(const EvalReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "gene_id\tr\tp\tq\tsignificant\tbaseline_r\n";
    char buf[128];
    for (std::size_t g = 0; g < rep.gene_ids.size(); ++g) {
        std::snprintf(buf, sizeof(buf), "%.17g\t%.17g\t%.17g\t%d\t%.17g",
                      rep.per_gene_r[g], rep.per_gene_p[g], rep.per_gene_q[g],
                      rep.significant[g] ? 1 : 0, rep.baseline_r[g]);
        out << rep.gene_ids[g] << '\t' << buf << '\n';
    }
    out << "# n_significant\t" << rep.n_significant << "\tlambda\t" << rep.lambda_used
        << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"co-expression prior-knowledge injection toolkit"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "max worker threads");

    // synth
    SynthArgs sa;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    synth_cmd->add_option("--patients", sa.cfg.n_patients);
    synth_cmd->add_option("--samples-per-patient", sa.cfg.samples_per_patient);
    synth_cmd->add_option("--genes", sa.cfg.n_genes);
    synth_cmd->add_option("--modules", sa.cfg.n_modules);
    synth_cmd->add_option("--genes-per-module", sa.cfg.genes_per_module);
    synth_cmd->add_option("--latent-dim", sa.cfg.latent_dim);
    synth_cmd->add_option("--embed-dim", sa.cfg.embed_dim);
    synth_cmd->add_option("--expression-noise", sa.cfg.expression_noise);
    synth_cmd->add_option("--embedding-noise", sa.cfg.embedding_noise);
    synth_cmd->add_option("--patches-per-sample", sa.cfg.patches_per_sample);
    synth_cmd->add_option("--seed", sa.cfg.seed);
    synth_cmd->add_option("--out-dir", sa.out_dir)->required();
    synth_cmd->add_flag("--write-patches", sa.write_patches);

    // build-graph
    std::string input, output, second_input, genes_path;
    double tau = 0.85;
    long block = 1024;
    bool absolute = false;
    auto* bg = app.add_subcommand("build-graph",
                                  "thresholded co-expression graph from expression");
    bg->add_option("--input", input, "expression TSV")->required();
    bg->add_option("--output", output, "edge-list TSV")->required();
    bg->add_option("--tau", tau);
    bg->add_option("--block", block);
    bg->add_flag("--absolute", absolute, "threshold |r| instead of signed r");

    auto* gs = app.add_subcommand("graph-stats", "node/edge counts of a graph");
    gs->add_option("--input", input)->required();

    auto* un = app.add_subcommand("union", "union of two graphs");
    un->add_option("--a", input)->required();
    un->add_option("--b", second_input)->required();
    un->add_option("--output", output)->required();

    // embed
    long dim = 32, max_iter = 500;
    double tol = 1e-5;
    std::uint64_t seed = 0;
    auto* em = app.add_subcommand("embed", "NMF gene embeddings from a graph");
    em->add_option("--graph", input)->required();
    em->add_option("--universe", genes_path, "gene-id list file")->required();
    em->add_option("--dim", dim);
    em->add_option("--max-iter", max_iter);
    em->add_option("--tol", tol);
    em->add_option("--seed", seed);
    em->add_option("--output", output, "PKMX output; gene sidecar gets _genes.txt")
        ->required();

    // np-eval
    int k = 100;
    std::string emb_path;
    auto* np = app.add_subcommand("np-eval", "neighborhood preservation of embeddings");
    np->add_option("--graph", input)->required();
    np->add_option("--embeddings", emb_path, "PKMX gene embedding matrix")->required();
    np->add_option("--genes", genes_path, "gene-id sidecar")->required();
    np->add_option("--k", k);
    np->add_option("--output", output);

    // shared train/sweep/evaluate options
    std::string expr_path, wemb_path, wids_path, gmat_path, fold_path, model_path;
    int fold_index = 0;
    double lambda = 0.0, alpha = 0.05;
    train_eval::TrainConfig tcfg;
    std::vector<double> grid = {0.1, 0.2, 0.5, 0.8, 0.9};
    auto add_data_opts = [&](CLI::App* cmd) {
        cmd->add_option("--expression", expr_path)->required();
        cmd->add_option("--embeddings", wemb_path, "PKMX sample embeddings")->required();
        cmd->add_option("--embedding-ids", wids_path)->required();
        cmd->add_option("--fold-spec", fold_path)->required();
        cmd->add_option("--fold", fold_index);
        cmd->add_option("--alpha", alpha);
    };
    auto add_train_opts = [&](CLI::App* cmd) {
        cmd->add_option("--learning-rate", tcfg.learning_rate);
        cmd->add_option("--batch-size", tcfg.batch_size);
        cmd->add_option("--max-epochs", tcfg.max_epochs);
        cmd->add_option("--patience", tcfg.patience);
        cmd->add_option("--seed", tcfg.seed);
    };

    auto* tr = app.add_subcommand("train", "train one PK head");
    add_data_opts(tr);
    add_train_opts(tr);
    tr->add_option("--pk-embeddings", gmat_path, "PKMX G matrix (omit for no PK)");
    tr->add_option("--lambda", lambda);
    tr->add_option("--output", model_path, "model artifact")->required();
    tr->add_option("--report", output, "evaluation report TSV");

    auto* sw = app.add_subcommand("sweep", "train across a lambda grid");
    add_data_opts(sw);
    add_train_opts(sw);
    sw->add_option("--pk-embeddings", gmat_path)->required();
    sw->add_option("--grid", grid, "lambda values");
    sw->add_option("--out-dir", output)->required();

    auto* ev = app.add_subcommand("evaluate", "evaluate a saved model on a fold");
    add_data_opts(ev);
    ev->add_option("--model", model_path)->required();
    ev->add_option("--report", output)->required();
    ev->add_option("--baseline-seed", seed);

    // make-folds
    int n_folds = 5;
    std::vector<double> ratios = {0.72, 0.08, 0.20};
    auto* mf = app.add_subcommand("make-folds", "patient-level CV folds");
    mf->add_option("--expression", expr_path)->required();
    mf->add_option("--n-folds", n_folds);
    mf->add_option("--ratios", ratios)->expected(3);
    mf->add_option("--seed", seed);
    mf->add_option("--output", output)->required();

    auto* run = app.add_subcommand("run", "full experiment from a config file");
    run->add_option("--config", input)->required();

    CLI11_PARSE(app, argc, argv);
    (void)threads;  // kernels are sequential-deterministic; flag reserved

    try {
        if (synth_cmd->parsed()) {
            cmd_synth(sa);
        } else if (bg->parsed()) {
            const auto expr = dataio::load_expression_matrix(input);
            coexpr::BuildOptions opt;
            opt.tau = tau;
            opt.block = block;
            opt.mode = absolute ? coexpr::ThresholdMode::absolute
                                : coexpr::ThresholdMode::signed_corr;
            const auto g = coexpr::build_graph(expr, opt);
            dataio::save_graph_edgelist(g, output);
            const auto stats = coexpr::graph_stats(g);
            std::cout << "genes_in_network\t" << stats.n_genes_in_network
                      << "\npairs\t" << stats.n_pairs << '\n';
        } else if (gs->parsed()) {
            const auto g = dataio::load_graph_edgelist(input);
            const auto stats = coexpr::graph_stats(g);
            std::cout << "genes_in_network\t" << stats.n_genes_in_network
                      << "\npairs\t" << stats.n_pairs << '\n';
        } else if (un->parsed()) {
            const auto a = dataio::load_graph_edgelist(input);
            const auto b = dataio::load_graph_edgelist(second_input);
            dataio::save_graph_edgelist(coexpr::union_graphs(a, b), output);
        } else if (em->parsed()) {
            const auto g = dataio::load_graph_edgelist(input);
            const auto universe = dataio::load_id_list(genes_path);
            const auto adj = nmf::adjacency_from_graph(g, universe);
            nmf::FactorizeOptions opt;
            opt.max_iter = static_cast<int>(max_iter);
            opt.tol = tol;
            opt.seed = seed;
            const auto emb = nmf::factorize(adj, dim, opt);
            dataio::save_matrix(emb.G, output);
            const auto sidecar = output + "_genes.txt";
            dataio::save_id_list(emb.gene_ids, sidecar);
            std::cout << "final_loss\t" << emb.final_loss << "\niterations\t"
                      << emb.iterations_run << '\n';
        } else if (np->parsed()) {
            const auto g = dataio::load_graph_edgelist(input);
            const auto universe = dataio::load_id_list(genes_path);
            const auto adj = nmf::adjacency_from_graph(g, universe);
            GeneEmbeddings emb;
            emb.gene_ids = universe;
            emb.G = dataio::load_matrix(emb_path);
            emb.d = emb.G.cols();
            const auto report = embedqc::np_score(adj, emb, k);
            std::cout << "np_score\t" << report.np_score << "\ngenes_evaluated\t"
                      << report.genes_evaluated << '\n';
            if (!output.empty()) {
                std::ofstream out(output);
                out << "gene_id\toverlap\n";
                for (const auto& [gene, frac] : report.per_gene_overlap)
                    out << gene << '\t' << frac << '\n';
                out << "# np_score\t" << report.np_score << "\tk\t" << report.k << '\n';
            }
        } else if (tr->parsed() || sw->parsed() || ev->parsed()) {
            const auto expr = dataio::load_expression_matrix(expr_path);
            const auto table = dataio::load_embedding_table(wemb_path, wids_path);
            const Matrix w_all = aligned_embeddings(expr, table);
            const auto folds = dataio::load_fold_spec(fold_path);
            const auto fold = assemble_fold(expr, w_all, folds, fold_index);
            const auto gene_hash = dataio::gene_list_hash(expr.gene_ids);
            if (ev->parsed()) {
                std::uint64_t stored = 0;
                const auto head = dataio::load_head(model_path, &stored);
                if (stored != gene_hash)
                    throw std::runtime_error("model gene universe does not match data");
                const auto rep = train_eval::evaluate_head(head, fold.w_test,
                                                           fold.y_test, fold.gene_ids,
                                                           alpha, seed);
                write_report(rep, output);
                std::cout << "n_significant\t" << rep.n_significant << '\n';
            } else if (tr->parsed()) {
                Matrix g = gmat_path.empty()
                               ? Matrix::Zero(expr.n_genes(), table.dim)
                               : dataio::load_matrix(gmat_path);
                predictor::PkLinearHead head =
                    predictor::make_plain_head(expr.n_genes(), table.dim);
                head.G = g;
                head.lambda = lambda;
                const auto hist = train_eval::train_model(
                    head, fold.w_train, fold.y_train, fold.w_val, fold.y_val, tcfg);
                dataio::save_head(head, gene_hash, model_path);
                if (!output.empty()) {
                    const auto rep = train_eval::evaluate_head(
                        head, fold.w_test, fold.y_test, fold.gene_ids, alpha,
                        tcfg.seed + 1);
                    write_report(rep, output);
                    std::cout << "n_significant\t" << rep.n_significant << '\n';
                }
                std::cout << "best_epoch\t" << hist.best_epoch << "\nbest_val_pearson\t"
                          << hist.best_val_pearson << '\n';
            } else {
                fs::create_directories(output);
                const Matrix g = dataio::load_matrix(gmat_path);
                const auto sweep = train_eval::lambda_sweep(fold, g, grid, tcfg);
                for (std::size_t li = 0; li < sweep.lambdas.size(); ++li) {
                    char name[64];
                    std::snprintf(name, sizeof(name), "lambda%g_report.tsv",
                                  sweep.lambdas[li]);
                    write_report(sweep.reports[li], (fs::path(output) / name).string());
                }
                std::cout << "selected_lambda\t" << sweep.selected_lambda
                          << "\nn_significant\t"
                          << sweep.reports[sweep.selected_index].n_significant << '\n';
            }
        } else if (mf->parsed()) {
            const auto expr = dataio::load_expression_matrix(expr_path);
            const auto spec = dataio::make_folds(expr.patient_ids, n_folds, ratios[0],
                                                 ratios[1], ratios[2], seed);
            dataio::save_fold_spec(spec, output);
        } else if (run->parsed()) {
            const auto cfg = experiment::load_experiment_config(input);
            const auto result = experiment::run_experiment(cfg);
            std::cout << "summary\t" << result.summary_path << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
