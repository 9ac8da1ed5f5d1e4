#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "c2lt/archive.hpp"
#include "c2lt/seam.hpp"

namespace c2lt {

// All module knobs plus run-level settings. Key names follow the config-file
// syntax ("partition.link_radius=0.05").
struct RunConfig {
    // partition
    double link_radius = 0.03;
    double max_frac = 0.6;
    int min_count = 8;
    std::string partition_source = "auto";  // auto | hints | ownership

    // chart
    double chart_radius = 0.22;
    int min_neighbors = 8;
    int anchors_per_component = 10;

    // context
    int ctx_dim = 64;
    int ctx_heads = 4;
    int ctx_layers = 2;
    uint64_t ctx_seed = 1;

    // seam
    double eps_contact = 0.05;
    int seam_hidden = 32;
    double seam_lr = 0.1;
    int seam_epochs = 200;
    double lambda_compat = 1.0;
    double lambda_pose = 0.05;
    double lambda_coll = 0.05;
    double lambda_sep = 0.05;
    double lambda_inv = 0.05;
    double tau_band_scale = 0.1;
    double candidate_radius = 0.3;
    int train_max_examples = 24000;

    // realize
    double margin = 0.0;
    double keep_floor = 0.9;
    bool realize_enabled = true;

    // audit
    double delta_coll = 0.05;
    double delta_support = 0.05;
    double r_max = 0.6;
    int d_max = 64;

    // run
    uint64_t seed = 0;
    int workers = 1;
    int bootstrap_resamples = 5000;

    void set(const std::string& key, const std::string& value);
    static RunConfig from_file(const std::string& path);
    // Config echo for reports. Excludes `workers`: thread count must not
    // change report bytes.
    std::string echo_json() const;
};

// Subcommand bodies (the CLI wraps these). All are deterministic given
// config + seed, independent of worker count.
void cmd_synth(size_t n, uint64_t seed, int density, bool decoys, bool collisions,
               const std::string& out_path);

// input: archive path or a directory of .obj files.
void cmd_preprocess(const std::string& input, const std::string& out_path, const RunConfig& cfg);

void cmd_evaluate(const std::string& archive_path, const std::string& report_path,
                  const RunConfig& cfg, bool sweep);

void cmd_repair_bench(const std::string& archive_path, const std::string& report_path,
                      const RunConfig& cfg, BankMode mode = BankMode::EdgeBank);

void cmd_serialize_audit(const std::string& archive_path, const std::string& report_path,
                         const RunConfig& cfg, double lambda, double epsilon);

void cmd_report(const std::string& report_path);

// Serialization order: partition-major, Morton code of the anchor within a
// partition, chart id last. Returns chart ids in order.
std::vector<int> serialization_order(const std::vector<Chart>& charts);

// Shared preprocessing step (exposed for tests): charts + tokens + seams for
// one archived object. Fills partition, charts, seams, valid_chart_edges.
void preprocess_object(ArchiveObject& obj, const RunConfig& cfg);

}  // namespace c2lt
