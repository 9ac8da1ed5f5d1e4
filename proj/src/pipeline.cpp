#include "c2lt/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "c2lt/constants.hpp"
#include "c2lt/context.hpp"
#include "c2lt/metrics.hpp"
#include "c2lt/realize.hpp"
#include "c2lt/tokenizer.hpp"
#include "c2lt/util.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace c2lt {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

void RunConfig::set(const std::string& key, const std::string& value) {
    auto as_double = [&] { return std::stod(value); };
    auto as_int = [&] { return std::stoi(value); };
    auto as_u64 = [&] { return uint64_t(std::stoull(value)); };
    auto as_bool = [&] { return value == "1" || value == "true" || value == "on"; };
    try {
        if (key == "partition.link_radius") link_radius = as_double();
        else if (key == "partition.max_frac") max_frac = as_double();
        else if (key == "partition.min_count") min_count = as_int();
        else if (key == "partition.source") partition_source = value;
        else if (key == "chart.radius") chart_radius = as_double();
        else if (key == "chart.min_neighbors") min_neighbors = as_int();
        else if (key == "chart.anchors") anchors_per_component = as_int();
        else if (key == "context.dim") ctx_dim = as_int();
        else if (key == "context.heads") ctx_heads = as_int();
        else if (key == "context.layers") ctx_layers = as_int();
        else if (key == "context.seed") ctx_seed = as_u64();
        else if (key == "seam.eps_contact") eps_contact = as_double();
        else if (key == "seam.hidden") seam_hidden = as_int();
        else if (key == "seam.lr") seam_lr = as_double();
        else if (key == "seam.epochs") seam_epochs = as_int();
        else if (key == "seam.lambda_compat") lambda_compat = as_double();
        else if (key == "seam.lambda_pose") lambda_pose = as_double();
        else if (key == "seam.lambda_coll") lambda_coll = as_double();
        else if (key == "seam.lambda_sep") lambda_sep = as_double();
        else if (key == "seam.lambda_inv") lambda_inv = as_double();
        else if (key == "seam.tau_band_scale") tau_band_scale = as_double();
        else if (key == "seam.candidate_radius") candidate_radius = as_double();
        else if (key == "seam.train_max_examples") train_max_examples = as_int();
        else if (key == "realize.margin") margin = as_double();
        else if (key == "realize.keep_floor") keep_floor = as_double();
        else if (key == "realize.enabled") realize_enabled = as_bool();
        else if (key == "audit.delta_coll") delta_coll = as_double();
        else if (key == "audit.delta_support") delta_support = as_double();
        else if (key == "audit.r_max") r_max = as_double();
        else if (key == "audit.d_max") d_max = as_int();
        else if (key == "run.seed") seed = as_u64();
        else if (key == "run.workers") workers = as_int();
        else if (key == "run.bootstrap_resamples") bootstrap_resamples = as_int();
        else throw ConfigError("unknown config key: " + key);
    } catch (const std::invalid_argument&) {
        throw ConfigError("bad value for " + key + ": " + value);
    } catch (const std::out_of_range&) {
        throw ConfigError("value out of range for " + key + ": " + value);
    }
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    RunConfig cfg;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        auto trim = [](std::string s) {
            auto a = s.find_first_not_of(" \t");
            auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

std::string RunConfig::echo_json() const {
    json j;
    j["partition.link_radius"] = link_radius;
    j["partition.max_frac"] = max_frac;
    j["partition.min_count"] = min_count;
    j["partition.source"] = partition_source;
    j["chart.radius"] = chart_radius;
    j["chart.min_neighbors"] = min_neighbors;
    j["chart.anchors"] = anchors_per_component;
    j["context.dim"] = ctx_dim;
    j["context.heads"] = ctx_heads;
    j["context.layers"] = ctx_layers;
    j["context.seed"] = ctx_seed;
    j["seam.eps_contact"] = eps_contact;
    j["seam.hidden"] = seam_hidden;
    j["seam.lr"] = seam_lr;
    j["seam.epochs"] = seam_epochs;
    j["seam.lambda_compat"] = lambda_compat;
    j["seam.lambda_pose"] = lambda_pose;
    j["seam.lambda_coll"] = lambda_coll;
    j["seam.lambda_sep"] = lambda_sep;
    j["seam.lambda_inv"] = lambda_inv;
    j["seam.tau_band_scale"] = tau_band_scale;
    j["seam.candidate_radius"] = candidate_radius;
    j["seam.train_max_examples"] = train_max_examples;
    j["realize.margin"] = margin;
    j["realize.keep_floor"] = keep_floor;
    j["realize.enabled"] = realize_enabled;
    j["audit.delta_coll"] = delta_coll;
    j["audit.delta_support"] = delta_support;
    j["audit.r_max"] = r_max;
    j["audit.d_max"] = d_max;
    j["run.seed"] = seed;
    j["run.bootstrap_resamples"] = bootstrap_resamples;
    return j.dump();
}

namespace {

void set_workers(int workers) {
#ifdef _OPENMP
    if (workers > 0) omp_set_num_threads(workers);
#else
    (void)workers;
#endif
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open output file: " + path);
    out << text;
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

void cmd_synth(size_t n, uint64_t seed, int density, bool decoys, bool collisions,
               const std::string& out_path) {
    std::vector<SynthObject> corpus = generate_corpus(n, seed, density, decoys, collisions);
    std::vector<ArchiveObject> objects(corpus.size());
    for (size_t i = 0; i < corpus.size(); ++i) {
        objects[i].id = corpus[i].id;
        objects[i].surface = std::move(corpus[i].surface);
        objects[i].gt = std::move(corpus[i].gt);
        objects[i].has_gt = true;
    }
    write_archive(out_path, objects);
}

// ---------------------------------------------------------------------------
// preprocess
// ---------------------------------------------------------------------------

std::vector<int> serialization_order(const std::vector<Chart>& charts) {
    std::vector<int> order(charts.size());
    for (size_t i = 0; i < charts.size(); ++i) order[i] = int(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (charts[a].partition != charts[b].partition)
            return charts[a].partition < charts[b].partition;
        uint64_t ma = morton3(charts[a].anchor.x, charts[a].anchor.y, charts[a].anchor.z);
        uint64_t mb = morton3(charts[b].anchor.x, charts[b].anchor.y, charts[b].anchor.z);
        if (ma != mb) return ma < mb;
        return a < b;
    });
    return order;
}

void preprocess_object(ArchiveObject& obj, const RunConfig& cfg) {
    const SurfaceObject& surf = obj.surface;
    if (surf.points.empty()) throw DataError("object has no points");

    // Partition: ground-truth ownership when present (and requested), else
    // unsupervised hints.
    bool use_ownership = cfg.partition_source == "ownership" ||
                         (cfg.partition_source == "auto" && obj.has_gt);
    if (use_ownership) {
        obj.partition = compact_partition(surf.component_of);
    } else {
        obj.partition = partition_hints(surf, cfg.link_radius, cfg.max_frac, size_t(cfg.min_count));
    }

    // Anchors: FPS per component plus designated contact anchors.
    NNIndex index(surf.points);
    std::set<size_t> anchor_set;
    int components = surf.component_count();
    for (int c = 0; c < components; ++c) {
        for (size_t a : fps_sample(surf, c, size_t(cfg.anchors_per_component)))
            anchor_set.insert(a);
    }
    std::map<std::pair<int, int>, std::pair<size_t, size_t>> contact_anchor;  // per contact
    if (obj.has_gt) {
        for (const auto& spec : obj.gt.contacts) {
            if (spec.gap < 0.0) continue;
            auto nearest_in_component = [&](int comp) {
                double best = std::numeric_limits<double>::infinity();
                size_t arg = 0;
                for (size_t i = 0; i < surf.points.size(); ++i) {
                    if (surf.component_of[i] != comp) continue;
                    double d2 = squared_dist(surf.points[i], spec.center);
                    if (d2 < best) {
                        best = d2;
                        arg = i;
                    }
                }
                return arg;
            };
            size_t child_anchor = nearest_in_component(spec.child);
            size_t parent_anchor = nearest_in_component(spec.parent);
            anchor_set.insert(child_anchor);
            anchor_set.insert(parent_anchor);
            contact_anchor[{spec.child, spec.parent}] = {child_anchor, parent_anchor};
        }
    }

    ChartConfig chart_cfg;
    chart_cfg.radius = cfg.chart_radius;
    chart_cfg.min_neighbors = size_t(cfg.min_neighbors);
    obj.charts.clear();
    std::map<size_t, int> chart_of_anchor;
    for (size_t a : anchor_set) {
        Chart chart = build_chart(surf, index, a, cfg.chart_radius, obj.partition, chart_cfg);
        chart.id = int(obj.charts.size());
        chart.token = tokenize_chart(chart);
        chart_of_anchor[a] = chart.id;
        obj.charts.push_back(std::move(chart));
    }

    // Seam candidates with analytic targets.
    ChartSupports supports = build_supports(surf, obj.charts);
    obj.seams = propose_candidates(obj.charts, supports, cfg.eps_contact);

    // Valid chart edges from the attachment tree: the designated child
    // contact chart pairs with every parent-component chart whose support
    // reaches across the contact gap.
    obj.valid_chart_edges.clear();
    std::set<std::pair<int, int>> valid_pairs;  // undirected membership test
    if (obj.has_gt) {
        for (const auto& spec : obj.gt.contacts) {
            if (spec.gap < 0.0) continue;
            auto it = contact_anchor.find({spec.child, spec.parent});
            if (it == contact_anchor.end()) continue;
            int child_chart = chart_of_anchor.at(it->second.first);
            // Valid parents: parent-component charts anchored at the patch
            // whose support reaches across the contact gap.
            double eps_valid = spec.gap + 0.002;
            for (const auto& c : obj.charts) {
                if (surf.component_of[c.anchor_id] != spec.parent) continue;
                if ((c.anchor - spec.center).norm() > 0.12) continue;
                if (support_distance(supports, child_chart, c.id) > eps_valid) continue;
                obj.valid_chart_edges.emplace_back(child_chart, c.id);
                valid_pairs.insert({std::min(child_chart, c.id), std::max(child_chart, c.id)});
            }
        }
        std::sort(obj.valid_chart_edges.begin(), obj.valid_chart_edges.end());
        obj.valid_chart_edges.erase(
            std::unique(obj.valid_chart_edges.begin(), obj.valid_chart_edges.end()),
            obj.valid_chart_edges.end());
    }

    std::set<std::pair<int, int>> collision_components;
    for (const auto& [a, b] : obj.gt.collision_pairs) {
        collision_components.insert({a, b});
        collision_components.insert({b, a});
    }

    for (auto& cand : obj.seams) {
        const Chart& ci = obj.charts[cand.source];
        const Chart& cj = obj.charts[cand.dest];
        double tau_band = cfg.tau_band_scale * std::min(ci.scale, cj.scale);
        cand.target = compat_target(ci, cj, supports, tau_band);
        cand.pose_target = pose_refine_target(ci, cj, supports, tau_band);
        int key_a = std::min(cand.source, cand.dest), key_b = std::max(cand.source, cand.dest);
        cand.validity_label = valid_pairs.count({key_a, key_b}) ? 1 : 0;
        int comp_i = surf.component_of[ci.anchor_id];
        int comp_j = surf.component_of[cj.anchor_id];
        cand.collision_label = collision_components.count({comp_i, comp_j}) ? 1 : 0;
    }
}

void cmd_preprocess(const std::string& input, const std::string& out_path, const RunConfig& cfg) {
    set_workers(cfg.workers);
    std::vector<ArchiveObject> objects;
    if (fs::is_directory(input)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(input))
            if (entry.path().extension() == ".obj") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            ArchiveObject obj;
            obj.id = f.stem().string();
            try {
                std::ifstream in(f);
                RawMesh mesh = parse_obj(in);
                obj.surface = normalize(mesh);
            } catch (const std::exception& e) {
                std::cerr << "skip " << f.string() << ": " << e.what() << "\n";
                continue;
            }
            objects.push_back(std::move(obj));
        }
    } else {
        objects = read_archive(input);
    }

    std::vector<char> ok(objects.size(), 0);
    std::vector<std::string> errors(objects.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < long(objects.size()); ++i) {
        try {
            preprocess_object(objects[size_t(i)], cfg);
            ok[size_t(i)] = 1;
        } catch (const std::exception& e) {
            errors[size_t(i)] = e.what();
        }
    }
    std::vector<ArchiveObject> kept;
    size_t skipped = 0;
    for (size_t i = 0; i < objects.size(); ++i) {
        if (ok[i]) {
            kept.push_back(std::move(objects[i]));
        } else {
            ++skipped;
            std::cerr << "skip " << objects[i].id << ": " << errors[i] << "\n";
        }
    }
    if (kept.empty()) throw DataError("preprocess: zero objects processed successfully");
    write_archive(out_path, kept);
    std::cerr << "preprocessed " << kept.size() << " objects, skipped " << skipped << "\n";
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

namespace {

struct ObjectEvaluation {
    StructuralReport report;
    double min_kept_fraction = 1.0;
    StructFeatures pred_features;
    StructFeatures ref_features;
    bool has_features = false;
};

ObjectEvaluation evaluate_object(const ArchiveObject& obj, const RunConfig& cfg, double margin,
                                 double keep_floor, bool realize_on) {
    if (obj.charts.empty()) throw DataError("object " + obj.id + " has no charts (run preprocess)");
    const SurfaceObject& surf = obj.surface;
    int parts = obj.partition.count;
    if (parts <= 0) throw DataError("object " + obj.id + " has no partition");

    // Predictions: every chart realizes its support back into object space.
    std::vector<Vec3> pred_points, pred_normals;
    std::vector<int> pred_owner;
    for (const auto& chart : obj.charts) {
        for (size_t k = 0; k < chart.local_points.size(); ++k) {
            pred_points.push_back(place_back(chart, chart.local_points[k]));
            pred_normals.push_back(chart.frame.apply(chart.local_normals[k]));
            pred_owner.push_back(chart.partition);
        }
    }

    // GT supports per partition.
    std::vector<std::vector<Vec3>> gt_supports(parts);
    for (size_t i = 0; i < surf.points.size(); ++i)
        gt_supports[obj.partition.assign[i]].push_back(surf.points[i]);
    std::vector<NNIndex> support_index(parts);
    for (int p = 0; p < parts; ++p) support_index[p] = NNIndex(gt_supports[p]);

    std::vector<char> keep(pred_points.size(), 1);
    if (realize_on)
        keep = realize_component_owned(pred_points, pred_owner, support_index, margin, keep_floor);

    std::vector<Vec3> kept_points, kept_normals;
    std::vector<std::vector<Vec3>> kept_by_part(parts);
    std::vector<size_t> owner_total(parts, 0), owner_kept(parts, 0);
    for (size_t i = 0; i < pred_points.size(); ++i) {
        ++owner_total[pred_owner[i]];
        if (!keep[i]) continue;
        ++owner_kept[pred_owner[i]];
        kept_points.push_back(pred_points[i]);
        kept_normals.push_back(pred_normals[i]);
        kept_by_part[pred_owner[i]].push_back(pred_points[i]);
    }

    ObjectEvaluation ev;
    ev.report.tau = adaptive_tau(surf.extent);
    DistancePair dp = chamfer_hausdorff(kept_points, surf.points);
    ev.report.chamfer = dp.chamfer;
    ev.report.hausdorff = dp.hausdorff;
    ev.report.separation = separation_score(kept_by_part, ev.report.tau);
    ev.report.contamination = contamination_rate(kept_by_part, gt_supports, ev.report.tau);

    // Normal consistency against the nearest source point's normal.
    NNIndex all_index(surf.points);
    std::vector<Vec3> ref_normals(kept_points.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < long(kept_points.size()); ++i)
        ref_normals[size_t(i)] = surf.normals[all_index.nearest_sq(kept_points[size_t(i)]).id];
    ev.report.normal_consistency = normal_consistency(kept_normals, ref_normals);

    ev.report.support_violations =
        int(support_violation(kept_by_part, -1.0, cfg.delta_support).size());

    for (int p = 0; p < parts; ++p) {
        if (owner_total[p] == 0) continue;
        ev.min_kept_fraction = std::min(
            ev.min_kept_fraction, double(owner_kept[p]) / double(owner_total[p]));
    }

    std::vector<std::vector<Vec3>> gt_units = gt_supports;
    ev.pred_features = struct_features(kept_by_part);
    ev.ref_features = struct_features(gt_units);
    ev.has_features = true;
    return ev;
}

json evaluation_rows(const std::vector<ArchiveObject>& objects, const RunConfig& cfg,
                     double margin, double keep_floor, bool realize_on,
                     std::vector<ObjectEvaluation>& evals) {
    evals.assign(objects.size(), {});
    std::vector<char> ok(objects.size(), 0);
    std::vector<std::string> errors(objects.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < long(objects.size()); ++i) {
        try {
            evals[size_t(i)] = evaluate_object(objects[size_t(i)], cfg, margin, keep_floor,
                                               realize_on);
            ok[size_t(i)] = 1;
        } catch (const std::exception& e) {
            errors[size_t(i)] = e.what();
        }
    }
    for (size_t i = 0; i < objects.size(); ++i)
        if (!ok[i]) throw DataError("evaluate " + objects[i].id + ": " + errors[i]);

    json rows = json::array();
    for (size_t i = 0; i < objects.size(); ++i) {
        const auto& r = evals[i].report;
        json row;
        row["id"] = objects[i].id;
        row["chamfer"] = r.chamfer;
        row["hausdorff"] = r.hausdorff;
        row["contamination"] = r.contamination;
        row["separation"] = r.separation;
        row["normal_consistency"] = r.normal_consistency;
        row["support_violations"] = r.support_violations;
        row["tau"] = r.tau;
        row["min_kept_fraction"] = evals[i].min_kept_fraction;
        rows.push_back(std::move(row));
    }
    return rows;
}

json aggregate_block(const std::vector<ObjectEvaluation>& evals, const RunConfig& cfg) {
    auto summarize = [&](auto getter) {
        std::vector<double> values;
        for (const auto& ev : evals) values.push_back(getter(ev));
        BootstrapSummary bs =
            paired_bootstrap(values, cfg.bootstrap_resamples, derive_seed(cfg.seed, 0xb007ULL));
        json j;
        j["mean"] = bs.mean;
        j["ci_low"] = bs.ci_low;
        j["ci_high"] = bs.ci_high;
        return j;
    };
    json agg;
    agg["chamfer"] = summarize([](const ObjectEvaluation& e) { return e.report.chamfer; });
    agg["hausdorff"] = summarize([](const ObjectEvaluation& e) { return e.report.hausdorff; });
    agg["contamination"] =
        summarize([](const ObjectEvaluation& e) { return e.report.contamination; });
    agg["separation"] = summarize([](const ObjectEvaluation& e) { return e.report.separation; });
    agg["normal_consistency"] =
        summarize([](const ObjectEvaluation& e) { return e.report.normal_consistency; });
    return agg;
}

}  // namespace

void cmd_evaluate(const std::string& archive_path, const std::string& report_path,
                  const RunConfig& cfg, bool sweep) {
    set_workers(cfg.workers);
    std::vector<ArchiveObject> objects = read_archive(archive_path);
    if (objects.empty()) throw DataError("evaluate: empty archive");

    json report;
    report["meta"]["tool"] = "c2lt evaluate";
    report["meta"]["config"] = json::parse(cfg.echo_json());
    report["meta"]["archive"] = fs::path(archive_path).filename().string();

    std::vector<ObjectEvaluation> evals;
    report["objects"] =
        evaluation_rows(objects, cfg, cfg.margin, cfg.keep_floor, cfg.realize_enabled, evals);
    report["aggregate"] = aggregate_block(evals, cfg);

    // Structural FID + IQ/BC of predictions against the source units.
    {
        std::vector<StructFeatures> gen, ref;
        for (const auto& ev : evals) {
            gen.push_back(ev.pred_features);
            ref.push_back(ev.ref_features);
        }
        double mu_iq = 0.0, mu_bc = 0.0;
        for (const auto& f : ref) {
            mu_iq += f.iq_raw;
            mu_bc += f.bc_raw;
        }
        mu_iq /= double(ref.size());
        mu_bc /= double(ref.size());
        double iq = 0.0, bc = 0.0;
        for (const auto& f : gen) {
            StructScores s = struct_scores(f, mu_iq, mu_bc);
            iq += s.iq;
            bc += s.bc;
        }
        report["aggregate"]["structural_fid"] = structural_fid(gen, ref);
        report["aggregate"]["iq"] = iq / double(gen.size());
        report["aggregate"]["bc"] = bc / double(gen.size());
    }

    if (sweep) {
        json rows = json::array();
        auto add_row = [&](const char* policy, double m, double floor, bool on) {
            std::vector<ObjectEvaluation> ev2;
            evaluation_rows(objects, cfg, m, floor, on, ev2);
            json row;
            row["policy"] = policy;
            row["margin"] = m;
            row["keep_floor"] = floor;
            double cd = 0, cont = 0, sep = 0;
            for (const auto& e : ev2) {
                cd += e.report.chamfer;
                cont += e.report.contamination;
                sep += e.report.separation;
            }
            row["chamfer"] = cd / double(ev2.size());
            row["contamination"] = cont / double(ev2.size());
            row["separation"] = sep / double(ev2.size());
            rows.push_back(row);

            // Per-object contamination improvement vs. the no-filter row is
            // appended later once that row exists.
            return ev2;
        };
        auto no_filter = add_row("no_filter", 0.0, 0.0, false);
        for (double floor : constants::kKeepFloorSweep)
            add_row("keep_floor_sweep", constants::kDefaultMargin, floor, true);
        for (double m : constants::kMarginSweep)
            add_row("margin_sweep", m, constants::kDefaultKeepFloor, true);
        report["sweep"] = rows;

        // Paired contamination improvement of the main setting over no-filter.
        std::vector<ObjectEvaluation> main_evals;
        evaluation_rows(objects, cfg, constants::kDefaultMargin, constants::kDefaultKeepFloor,
                        true, main_evals);
        std::vector<double> improvement;
        for (size_t i = 0; i < main_evals.size(); ++i)
            improvement.push_back(no_filter[i].report.contamination -
                                  main_evals[i].report.contamination);
        BootstrapSummary bs = paired_bootstrap(improvement, cfg.bootstrap_resamples,
                                               derive_seed(cfg.seed, 0xc0417ULL));
        json imp;
        imp["metric"] = "contamination_vs_no_filter";
        imp["mean"] = bs.mean;
        imp["ci_low"] = bs.ci_low;
        imp["ci_high"] = bs.ci_high;
        imp["win_rate"] = bs.win_rate;
        report["improvement"] = imp;
    }

    write_text(report_path, report.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// repair-bench
// ---------------------------------------------------------------------------

namespace {

struct ScorerStats {
    std::vector<double> valid1, valid3, parent1, parent3, vmrr, pmrr;
    void add(const RankedRepair& r) {
        valid1.push_back(r.valid_at1);
        valid3.push_back(r.valid_at3);
        parent1.push_back(r.parent_at1);
        parent3.push_back(r.parent_at3);
        vmrr.push_back(r.valid_mrr);
        pmrr.push_back(r.parent_mrr);
    }
};

json stats_json(const ScorerStats& s, int resamples, uint64_t seed) {
    auto mean = [](const std::vector<double>& v) {
        if (v.empty()) return 0.0;
        double acc = 0;
        for (double x : v) acc += x;
        return acc / double(v.size());
    };
    json j;
    j["tasks"] = s.valid1.size();
    j["valid_at1"] = mean(s.valid1);
    j["valid_at3"] = mean(s.valid3);
    j["parent_at1"] = mean(s.parent1);
    j["parent_at3"] = mean(s.parent3);
    j["valid_mrr"] = mean(s.vmrr);
    j["parent_mrr"] = mean(s.pmrr);
    if (!s.valid1.empty()) {
        BootstrapSummary bs = paired_bootstrap(s.valid1, resamples, seed);
        j["valid_at1_ci"] = json::array({bs.ci_low, bs.ci_high});
    }
    return j;
}

}  // namespace

void cmd_repair_bench(const std::string& archive_path, const std::string& report_path,
                      const RunConfig& cfg, BankMode mode) {
    set_workers(cfg.workers);
    std::vector<ArchiveObject> objects = read_archive(archive_path);
    if (objects.empty()) throw DataError("repair-bench: empty archive");

    ContextConfig ctx_cfg;
    ctx_cfg.dim = cfg.ctx_dim;
    ctx_cfg.heads = cfg.ctx_heads;
    ctx_cfg.layers = cfg.ctx_layers;
    ctx_cfg.seed = cfg.ctx_seed;
    AttentionStack stack(ctx_cfg);

    // Per-object precomputation: supports, context tokens, tasks, examples.
    struct PerObject {
        ChartSupports supports;
        std::vector<std::vector<double>> tokens;
        std::vector<RepairTask> tasks;
        std::vector<SeamExample> examples;
        bool ok = false;
    };
    std::vector<PerObject> per(objects.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < long(objects.size()); ++i) {
        auto& obj = objects[size_t(i)];
        auto& po = per[size_t(i)];
        if (obj.charts.empty()) continue;
        po.supports = build_supports(obj.surface, obj.charts);
        AttentionStack::Inputs in;
        for (const auto& c : obj.charts) {
            in.tokens.push_back(token_features(c, ctx_cfg));
            in.partitions.push_back(c.partition);
            in.anchors.push_back(c.anchor);
            in.scales.push_back(c.scale);
        }
        po.tokens = stack.forward(in);
        po.tasks = build_repair_bank(obj.charts, po.supports, obj.valid_chart_edges, mode,
                                     cfg.candidate_radius,
                                     mode == BankMode::Prefix ? serialization_order(obj.charts)
                                                              : std::vector<int>{});
        for (const auto& cand : obj.seams) {
            SeamExample ex;
            ex.input = seam_input(po.tokens[cand.source], po.tokens[cand.dest], cand.coarse_rel,
                                  cand.scale_ratio);
            ex.target = cand.target;
            ex.pose_target = cand.pose_target;
            ex.collision_label = cand.collision_label;
            ex.invalid_label = 1 - cand.validity_label;
            po.examples.push_back(std::move(ex));
        }
        po.ok = true;
    }

    // Train/eval split by object index.
    std::vector<SeamExample> train_bank;
    size_t total_tasks = 0;
    for (size_t i = 0; i < objects.size(); ++i) {
        if (!per[i].ok) continue;
        total_tasks += per[i].tasks.size();
        if (i % 10 < 7)
            train_bank.insert(train_bank.end(), per[i].examples.begin(), per[i].examples.end());
    }

    json report;
    report["meta"]["tool"] = "c2lt repair-bench";
    report["meta"]["config"] = json::parse(cfg.echo_json());
    report["meta"]["mode"] = mode == BankMode::EdgeBank ? "edge-bank" : "prefix";

    if (total_tasks == 0) {
        report["tasks"] = 0;
        report["scorers"] = json::object();
        write_text(report_path, report.dump(2) + "\n");
        return;
    }

    // Deterministic stride cap on the training bank.
    if (int(train_bank.size()) > cfg.train_max_examples && cfg.train_max_examples > 0) {
        std::vector<SeamExample> capped;
        size_t stride = (train_bank.size() + cfg.train_max_examples - 1) /
                        size_t(cfg.train_max_examples);
        for (size_t i = 0; i < train_bank.size(); i += stride) capped.push_back(train_bank[i]);
        train_bank = std::move(capped);
    }

    SeamHead head = SeamHead::seeded(2 * cfg.ctx_dim + 8, cfg.seam_hidden,
                                     derive_seed(cfg.seed, 0x6ead5ULL));
    TrainSchedule sched;
    sched.lr = cfg.seam_lr;
    sched.epochs = cfg.seam_epochs;
    sched.lambda_compat = cfg.lambda_compat;
    sched.lambda_pose = cfg.lambda_pose;
    sched.lambda_coll = cfg.lambda_coll;
    sched.lambda_sep = cfg.lambda_sep;
    sched.lambda_inv = cfg.lambda_inv;
    TrainResult tr = train_seam_head(head, train_bank, sched);
    report["training"]["examples"] = train_bank.size();
    report["training"]["initial_loss"] = tr.loss_trace.front();
    report["training"]["final_loss"] = tr.loss_trace.back();

    // Evaluate scorers on held-out tasks.
    const std::pair<const char*, RepairScorer> scorers[] = {
        {"nn", RepairScorer::NearestNeighbor},
        {"dense_support", RepairScorer::DenseSupport},
        {"seam_head", RepairScorer::SeamHead},
        {"policy", RepairScorer::Policy},
    };
    json out_scorers;
    for (const auto& [name, scorer] : scorers) {
        ScorerStats all, hard, heur;
        for (size_t i = 0; i < objects.size(); ++i) {
            if (!per[i].ok || i % 10 < 7) continue;
            RepairScoringContext rctx;
            rctx.charts = &objects[i].charts;
            rctx.supports = &per[i].supports;
            rctx.tokens = &per[i].tokens;
            rctx.head = &head;
            rctx.tau_band_scale = cfg.tau_band_scale;
            for (const auto& task : per[i].tasks) {
                RankedRepair r = repair_rank(task, scorer, rctx);
                all.add(r);
                if (task.hard) hard.add(r);
                if (task.heuristic_fail) heur.add(r);
            }
        }
        json sj;
        sj["all"] = stats_json(all, cfg.bootstrap_resamples, derive_seed(cfg.seed, 0xa11ULL));
        sj["hard"] = stats_json(hard, cfg.bootstrap_resamples, derive_seed(cfg.seed, 0xa12ULL));
        sj["heuristic_fail"] =
            stats_json(heur, cfg.bootstrap_resamples, derive_seed(cfg.seed, 0xa13ULL));
        out_scorers[name] = std::move(sj);
    }
    report["tasks"] = total_tasks;
    report["scorers"] = std::move(out_scorers);
    write_text(report_path, report.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// serialize-audit
// ---------------------------------------------------------------------------

void cmd_serialize_audit(const std::string& archive_path, const std::string& report_path,
                         const RunConfig& cfg, double lambda, double epsilon) {
    set_workers(cfg.workers);
    std::vector<ArchiveObject> objects = read_archive(archive_path);
    if (objects.empty()) throw DataError("serialize-audit: empty archive");

    json rows = json::array();
    std::vector<json> row_slots(objects.size());
#pragma omp parallel for schedule(dynamic)
    for (long oi = 0; oi < long(objects.size()); ++oi) {
        const auto& obj = objects[size_t(oi)];
        json row;
        row["id"] = obj.id;
        if (obj.charts.empty()) {
            row["error"] = "no charts";
            row_slots[size_t(oi)] = std::move(row);
            continue;
        }
        std::vector<int> order = serialization_order(obj.charts);

        // Energy: uniform length-normalized sequence cost over the geometry
        // codebook plus the archived seam compatibilities.
        DecodingCandidate cand;
        cand.log_p_ar = -double(obj.charts.size()) * std::log(double(kGeoCodebook));
        for (const auto& seam : obj.seams) cand.compats.push_back(seam.target);
        row["energy"] = decoding_energy(cand, lambda, epsilon);
        row["charts"] = obj.charts.size();

        // Assembly forest: each chart parents to the nearest earlier chart.
        ChartSupports supports = build_supports(obj.surface, obj.charts);
        AssemblyGraph graph;
        graph.node_count = int(obj.charts.size());
        graph.delta_coll = cfg.delta_coll;
        graph.r_max = cfg.r_max;
        graph.d_max = cfg.d_max;
        for (size_t k = 1; k < order.size(); ++k) {
            int child = order[k];
            double best = std::numeric_limits<double>::infinity();
            int best_parent = order[0];
            for (size_t e = 0; e < k; ++e) {
                double d = support_distance(supports, child, order[e]);
                if (d < best) {
                    best = d;
                    best_parent = order[e];
                }
            }
            AssemblyGraph::Edge edge;
            edge.parent = best_parent;
            edge.child = child;
            edge.rel = compose(obj.charts[best_parent].pose().inverse(),
                               obj.charts[child].pose());
            graph.edges.push_back(edge);
        }
        std::vector<Pose> global = accumulate_transforms(graph);
        // Subsampled local charts as audit samples.
        std::vector<std::vector<Vec3>> samples(obj.charts.size());
        for (size_t c = 0; c < obj.charts.size(); ++c) {
            const auto& pts = obj.charts[c].local_points;
            size_t stride = std::max<size_t>(1, pts.size() / 60);
            for (size_t k = 0; k < pts.size(); k += stride) samples[c].push_back(pts[k]);
        }
        // Charts realize in place, so the audit uses each chart's own pose.
        std::vector<Pose> poses(obj.charts.size());
        for (size_t c = 0; c < obj.charts.size(); ++c) poses[c] = obj.charts[c].pose();
        CollisionReport audit = collision_audit(graph, samples, poses);
        row["local_violations"] = audit.local_violations.size();
        row["nonlocal_violations"] = audit.nonlocal_violations.size();
        row["max_penetration"] = audit.max_penetration;

        std::vector<std::vector<Vec3>> part_points(std::max(obj.partition.count, 1));
        for (size_t i = 0; i < obj.surface.points.size(); ++i) {
            int p = obj.partition.assign.empty() ? 0 : obj.partition.assign[i];
            part_points[p].push_back(obj.surface.points[i]);
        }
        row["ungrounded_components"] =
            support_violation(part_points, -1.0, cfg.delta_support).size();

        json order_json = json::array();
        for (int id : order) order_json.push_back(id);
        row["serialization"] = std::move(order_json);
        row_slots[size_t(oi)] = std::move(row);
    }
    for (auto& r : row_slots) rows.push_back(std::move(r));

    json report;
    report["meta"]["tool"] = "c2lt serialize-audit";
    report["meta"]["config"] = json::parse(cfg.echo_json());
    report["meta"]["lambda"] = lambda;
    report["meta"]["epsilon"] = epsilon;
    report["objects"] = std::move(rows);
    write_text(report_path, report.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

void cmd_report(const std::string& report_path) {
    std::ifstream in(report_path);
    if (!in) throw DataError("cannot open report: " + report_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError(std::string("report parse error: ") + e.what());
    }
    std::cout << "report: " << report_path << "\n";
    if (j.contains("meta") && j["meta"].contains("tool"))
        std::cout << "tool:   " << j["meta"]["tool"].get<std::string>() << "\n";
    if (j.contains("objects")) std::cout << "objects: " << j["objects"].size() << "\n";
    if (j.contains("aggregate")) {
        std::cout << "aggregate:\n";
        for (auto& [key, value] : j["aggregate"].items()) {
            if (value.is_object() && value.contains("mean"))
                std::cout << "  " << key << ": " << value["mean"].dump() << "  CI=["
                          << value["ci_low"].dump() << ", " << value["ci_high"].dump() << "]\n";
            else
                std::cout << "  " << key << ": " << value.dump() << "\n";
        }
    }
    if (j.contains("scorers")) {
        std::cout << "scorers (valid@1 all/hard/heuristic-fail):\n";
        for (auto& [name, s] : j["scorers"].items()) {
            std::cout << "  " << name << ": " << s["all"]["valid_at1"].dump() << " / "
                      << s["hard"]["valid_at1"].dump() << " / "
                      << s["heuristic_fail"]["valid_at1"].dump() << "\n";
        }
    }
    if (j.contains("tasks")) std::cout << "tasks: " << j["tasks"].dump() << "\n";
}

}  // namespace c2lt
