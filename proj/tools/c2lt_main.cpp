#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "c2lt/pipeline.hpp"
#include "c2lt/util.hpp"

namespace {

c2lt::RunConfig load_config(const std::string& config_path,
                            const std::vector<std::string>& overrides, uint64_t seed,
                            int workers) {
    c2lt::RunConfig cfg;
    if (!config_path.empty()) cfg = c2lt::RunConfig::from_file(config_path);
    for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw c2lt::ConfigError("--set expects key=value: " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed != UINT64_MAX) cfg.seed = seed;
    if (workers > 0) cfg.workers = workers;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"c2lt: interface-centric 3D structural state toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand

    std::string config_path;
    std::vector<std::string> overrides;
    uint64_t seed = UINT64_MAX;
    int workers = 0;
    app.add_option("--config", config_path, "key=value config file");
    app.add_option("--set", overrides, "config override key=value (repeatable)");
    app.add_option("--seed", seed, "run seed");
    app.add_option("--workers", workers, "worker thread count");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic assembly corpus");
    size_t synth_n = 10;
    uint64_t synth_seed = 0;
    int density = 260;
    bool decoys = false, collisions = false;
    std::string synth_out = "corpus.jsonl";
    synth->add_option("--n", synth_n, "number of objects");
    synth->add_option("--seed", synth_seed, "corpus seed");
    synth->add_option("--density", density, "surface samples per primitive");
    synth->add_flag("--decoys", decoys, "plant near-but-invalid decoy parts");
    synth->add_flag("--collisions", collisions, "plant interpenetrating attachments");
    synth->add_option("--out", synth_out, "output archive path")->required();

    // preprocess
    auto* pre = app.add_subcommand("preprocess", "charts + tokens + seam candidates");
    std::string pre_in, pre_out;
    pre->add_option("--in", pre_in, "input archive or OBJ directory")->required();
    pre->add_option("--out", pre_out, "output archive path")->required();

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "structural metrics report");
    std::string eval_in, eval_out = "evaluate.json";
    bool sweep = false;
    eval->add_option("--in", eval_in, "preprocessed archive")->required();
    eval->add_option("--out", eval_out, "report path");
    eval->add_flag("--sweep", sweep, "margin/keep-floor sweep rows");

    // repair-bench
    auto* repair = app.add_subcommand("repair-bench", "latent repair ranking benchmark");
    std::string rep_in, rep_out = "repair.json";
    std::string bank_mode = "edge-bank";
    repair->add_option("--in", rep_in, "preprocessed archive")->required();
    repair->add_option("--out", rep_out, "report path");
    repair->add_option("--mode", bank_mode, "edge-bank | prefix")
        ->check(CLI::IsMember({"edge-bank", "prefix"}));

    // serialize-audit
    auto* audit = app.add_subcommand("serialize-audit", "energy + assembly audit");
    std::string aud_in, aud_out = "audit.json";
    double lambda = 1.0, epsilon = 0.05;
    audit->add_option("--in", aud_in, "preprocessed archive")->required();
    audit->add_option("--out", aud_out, "report path");
    audit->add_option("--lambda", lambda, "seam penalty weight");
    audit->add_option("--epsilon", epsilon, "compatibility floor");

    // report
    auto* rep = app.add_subcommand("report", "pretty-print a report file");
    std::string report_in;
    rep->add_option("--in", report_in, "report path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        c2lt::RunConfig cfg = load_config(config_path, overrides, seed, workers);
        if (synth->parsed()) {
            c2lt::cmd_synth(synth_n, synth_seed, density, decoys, collisions, synth_out);
        } else if (pre->parsed()) {
            c2lt::cmd_preprocess(pre_in, pre_out, cfg);
        } else if (eval->parsed()) {
            c2lt::cmd_evaluate(eval_in, eval_out, cfg, sweep);
        } else if (repair->parsed()) {
            c2lt::cmd_repair_bench(rep_in, rep_out, cfg,
                                   bank_mode == "prefix" ? c2lt::BankMode::Prefix
                                                         : c2lt::BankMode::EdgeBank);
        } else if (audit->parsed()) {
            c2lt::cmd_serialize_audit(aud_in, aud_out, cfg, lambda, epsilon);
        } else if (rep->parsed()) {
            c2lt::cmd_report(report_in);
        }
    } catch (const c2lt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const c2lt::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
