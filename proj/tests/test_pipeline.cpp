#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kooptx/dataset.hpp"
#include "kooptx/errors.hpp"
#include "kooptx/experiment.hpp"
#include "kooptx/labels.hpp"
#include "kooptx/rng.hpp"
#include "kooptx/svg.hpp"
#include "kooptx/synth.hpp"

using namespace kooptx;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

size_t count_occurrences(const std::string& text, const std::string& needle) {
    size_t count = 0;
    for (size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size()))
        ++count;
    return count;
}

// Records synthesized straight into memory, `per_class` of each rhythm class.
std::vector<RawRecord> synth_records(size_t per_class, uint64_t base_seed = 42) {
    std::vector<RawRecord> records;
    for (SynthClass cls : kSynthClasses)
        for (size_t i = 0; i < per_class; ++i) {
            RawRecord rec;
            rec.file = synth_class_name(cls) + "_" + std::to_string(base_seed + i);
            rec.diagnosis = synth_class_diagnosis(cls);
            rec.signal = synth_ecg(cls, 10.0, 125.0, base_seed + i);
            records.push_back(std::move(rec));
        }
    return records;
}

PipelineConfig quick_config() {
    PipelineConfig cfg;
    cfg.train.max_epochs = 2;
    cfg.train.patience = 2;
    cfg.ablation_max_epochs = 2;
    cfg.ablation_patience = 1;
    return cfg;
}

}  // namespace

TEST_CASE("label rules map diagnoses by ordered first match") {
    const LabelRule binary = make_label_rule(Task::Binary);
    const LabelRule four = make_label_rule(Task::FourClass);

    const std::vector<std::string> texts{
        "Normal sinus rhythm",     "Atrial fibrillation", "Ventricular arrhythmia",
        "Atrioventricular block",  "Sinus tachycardia",   "NORMAL SINUS RHYTHM",
        "Bundle branch block",     "ventricular fibrillation"};

    const LabelResult b = generate_labels(texts, binary);
    CHECK(b.excluded == 1);  // sinus tachycardia matches nothing
    REQUIRE(b.kept == std::vector<size_t>{0, 1, 2, 3, 5, 6, 7});
    CHECK(b.labels == std::vector<int>{0, 1, 1, 1, 0, 1, 1});

    const LabelResult f = generate_labels(texts, four);
    CHECK(f.excluded == 1);
    REQUIRE(f.kept == std::vector<size_t>{0, 1, 2, 3, 5, 6, 7});
    // "Atrioventricular block" must land on Block even though it contains
    // "ventricular"; "ventricular fibrillation" is not atrial fibrillation.
    CHECK(f.labels == std::vector<int>{0, 1, 2, 3, 0, 3, 2});

    // The rules are total over the generator's diagnosis strings.
    std::vector<std::string> synth_texts;
    for (SynthClass cls : kSynthClasses)
        synth_texts.push_back(synth_class_diagnosis(cls));
    const LabelResult sb = generate_labels(synth_texts, binary);
    CHECK(sb.excluded == 0);
    CHECK(sb.labels == std::vector<int>{0, 1, 1, 1});
    const LabelResult sf = generate_labels(synth_texts, four);
    CHECK(sf.excluded == 0);
    CHECK(sf.labels == std::vector<int>{0, 1, 2, 3});

    CHECK_THROWS_AS(generate_labels(texts, LabelRule{}), ConfigError);
    CHECK(task_n_classes(Task::Binary) == 2);
    CHECK(task_n_classes(Task::FourClass) == 4);
    CHECK(task_from_name("binary") == Task::Binary);
    CHECK(task_from_name("four") == Task::FourClass);
    CHECK_THROWS_AS(task_from_name("fourclass"), ConfigError);
}

TEST_CASE("stratified split arithmetic") {
    // 4 classes x 25 records: every split within one record of proportional.
    std::vector<int> labels;
    for (int c = 0; c < 4; ++c)
        for (int i = 0; i < 25; ++i) labels.push_back(c);

    const DatasetSplit split = split_dataset(labels, {}, 42);
    CHECK(split.train.size() == 68);  // 17 per class
    CHECK(split.val.size() == 16);    // 4 per class
    CHECK(split.test.size() == 16);

    // Disjoint and exhaustive.
    std::set<size_t> seen;
    for (const auto* part : {&split.train, &split.val, &split.test})
        for (size_t idx : *part) {
            CHECK(seen.insert(idx).second);
            CHECK(idx < labels.size());
        }
    CHECK(seen.size() == labels.size());

    // Per-class proportionality within one record.
    for (int c = 0; c < 4; ++c) {
        const auto count_class = [&](const std::vector<size_t>& part) {
            size_t n = 0;
            for (size_t idx : part)
                if (labels[idx] == c) ++n;
            return n;
        };
        CHECK(count_class(split.train) == 17);
        CHECK(count_class(split.val) == 4);
        CHECK(count_class(split.test) == 4);
    }

    // Determinism and seed sensitivity.
    const DatasetSplit again = split_dataset(labels, {}, 42);
    CHECK(again.train == split.train);
    CHECK(again.val == split.val);
    CHECK(again.test == split.test);
    const DatasetSplit other = split_dataset(labels, {}, 43);
    CHECK(other.train != split.train);

    // A class with fewer than 3 records routes whole to train.
    const std::vector<int> tiny{0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1};
    const DatasetSplit lop = split_dataset(tiny, {}, 7);
    size_t ones_in_train = 0;
    for (size_t idx : lop.train)
        if (tiny[idx] == 1) ++ones_in_train;
    CHECK(ones_in_train == 2);
    for (size_t idx : lop.val) CHECK(tiny[idx] == 0);
    for (size_t idx : lop.test) CHECK(tiny[idx] == 0);

    CHECK_THROWS_AS(split_dataset(labels, {0.8, 0.15, 0.15}, 1), ConfigError);
    CHECK_THROWS_AS(split_dataset({}, {}, 1), DataError);
}

TEST_CASE("prepare_data labels, normalizes and splits") {
    const std::vector<RawRecord> records = synth_records(5);
    const PipelineConfig cfg = quick_config();
    const PreparedData data = prepare_data(records, Task::FourClass, cfg);

    REQUIRE(data.signals.size() == 20);
    CHECK(data.excluded == 0);
    CHECK(data.n_classes() == 4);
    CHECK(data.fs == 125.0);
    // 5 per class -> 3 train / 1 val / 1 test per class.
    CHECK(data.split.train.size() == 12);
    CHECK(data.split.val.size() == 4);
    CHECK(data.split.test.size() == 4);

    for (const Signal& s : data.signals) {
        REQUIRE(s.samples.size() == 1250);
        double mean = 0.0;
        for (double v : s.samples) mean += v;
        CHECK(std::fabs(mean / 1250.0) < 1e-12);
    }

    // Binary collapses the three abnormal classes onto label 1.
    const PreparedData bin = prepare_data(records, Task::Binary, cfg);
    CHECK(bin.n_classes() == 2);
    CHECK(std::count(bin.labels.begin(), bin.labels.end(), 0) == 5);
    CHECK(std::count(bin.labels.begin(), bin.labels.end(), 1) == 15);
}

TEST_CASE("token builders produce the documented shapes") {
    const std::vector<RawRecord> records = synth_records(1);
    const PipelineConfig cfg = quick_config();
    const PreparedData data = prepare_data(records, Task::FourClass, cfg);

    const std::vector<Mat> wavelet = build_tokens(data, SystemKind::WaveletTx, cfg);
    const std::vector<Mat> koopman = build_tokens(data, SystemKind::KoopmanTx, cfg);
    const std::vector<Mat> hybrid = build_tokens(data, SystemKind::HybridTx, cfg);
    const std::vector<Mat> raw = build_tokens(data, SystemKind::RnnRaw, cfg);

    REQUIRE(wavelet.size() == 4);
    for (const Mat& m : wavelet) {
        CHECK(m.rows == 9);   // 10 s record, 2 s window, 1 s stride
        CHECK(m.cols == 20);  // 5 bands x 4 statistics
    }
    for (const Mat& m : koopman) {
        CHECK(m.rows == 9);
        CHECK(m.cols == 32);  // top 8 modes x 4 spectral numbers
    }
    for (const Mat& m : raw) {
        CHECK(m.rows == 1250);
        CHECK(m.cols == 1);
    }
    // Hybrid rows are the wavelet block followed by the Koopman block.
    for (size_t i = 0; i < hybrid.size(); ++i) {
        REQUIRE(hybrid[i].cols == 52);
        for (size_t r = 0; r < 9; ++r) {
            for (size_t c = 0; c < 20; ++c) CHECK(hybrid[i](r, c) == wavelet[i](r, c));
            for (size_t c = 0; c < 32; ++c)
                CHECK(hybrid[i](r, 20 + c) == koopman[i](r, c));
        }
    }
}

TEST_CASE("feature scaler standardizes training columns") {
    std::vector<Mat> tokens;
    Rng rng(11);
    for (int i = 0; i < 6; ++i) {
        Mat m(4, 3);
        for (size_t r = 0; r < 4; ++r) {
            m(r, 0) = 5.0 + 2.0 * rng.normal();
            m(r, 1) = -100.0 + 30.0 * rng.normal();
            m(r, 2) = 7.5;  // constant column
        }
        tokens.push_back(std::move(m));
    }
    const std::vector<size_t> train_idx{0, 1, 2, 3};
    const FeatureScaler sc = fit_scaler(tokens, train_idx);
    std::vector<Mat> scaled = tokens;
    apply_scaler(scaled, sc);

    for (size_t c = 0; c < 2; ++c) {
        double mean = 0.0, var = 0.0;
        size_t n = 0;
        for (size_t i : train_idx)
            for (size_t r = 0; r < 4; ++r, ++n) mean += scaled[i](r, c);
        mean /= static_cast<double>(n);
        for (size_t i : train_idx)
            for (size_t r = 0; r < 4; ++r)
                var += (scaled[i](r, c) - mean) * (scaled[i](r, c) - mean);
        var /= static_cast<double>(n);
        CHECK(std::fabs(mean) < 1e-12);
        CHECK(std::fabs(var - 1.0) < 1e-12);
    }
    // The constant column is centered but not divided by its zero spread.
    for (const Mat& m : scaled)
        for (size_t r = 0; r < 4; ++r) CHECK(m(r, 2) == 0.0);

    const std::string path = "/tmp/kooptx_scaler_test.json";
    save_scaler_json(sc, SystemKind::WaveletTx, Task::FourClass, path);
    const FeatureScaler back = load_scaler_json(path, SystemKind::WaveletTx, Task::FourClass);
    CHECK(back.mean == sc.mean);
    CHECK(back.stddev == sc.stddev);
    CHECK_THROWS_AS(load_scaler_json(path, SystemKind::KoopmanTx, Task::FourClass),
                    DataError);
    CHECK_THROWS_AS(load_scaler_json(path, SystemKind::WaveletTx, Task::Binary),
                    DataError);
    std::remove(path.c_str());

    CHECK_THROWS_AS(fit_scaler(tokens, {}), DataError);
}

TEST_CASE("eigenvalue scatter svg contract") {
    KoopmanModel model;
    model.eigvals = {{1.0, 0.0},
                     {0.9 * std::cos(M_PI / 4.0), 0.9 * std::sin(M_PI / 4.0)},
                     {0.9 * std::cos(M_PI / 4.0), -0.9 * std::sin(M_PI / 4.0)}};
    const std::string path = "/tmp/kooptx_eigen_test.svg";
    emit_eigen_plot(model, path);
    const std::string svg = slurp(path);

    CHECK(svg.rfind("<svg ", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(count_occurrences(svg, "<circle") == 1);  // the dashed unit circle
    CHECK(count_occurrences(svg, "stroke-dasharray") == 1);
    CHECK(count_occurrences(svg, "<rect") == 3);    // one marker per eigenvalue
    CHECK(count_occurrences(svg, "<path") == 0);    // nothing clamped

    // An eigenvalue outside the frame keeps its marker (clamped) and gains
    // an overflow chevron.
    model.eigvals.push_back({1.5, 0.3});
    emit_eigen_plot(model, path);
    const std::string clamped = slurp(path);
    CHECK(count_occurrences(clamped, "<circle") == 1);
    CHECK(count_occurrences(clamped, "<rect") == 4);
    CHECK(count_occurrences(clamped, "<path") == 1);
    std::remove(path.c_str());

    CHECK_THROWS_AS(emit_eigen_plot(KoopmanModel{}, path), DataError);
}

TEST_CASE("mode heatmap svg contract") {
    const std::string path = "/tmp/kooptx_heat_test.svg";

    Mat constant(3, 5);
    for (double& v : constant.data) v = 2.5;
    emit_mode_heatmap(constant, path);
    const std::string uniform = slurp(path);
    CHECK(count_occurrences(uniform, "<rect") == 15);  // cells are the only rects
    CHECK(count_occurrences(uniform, "rgb(255,255,255)") == 15);

    Mat spike(3, 5);
    spike(1, 2) = 4.0;
    emit_mode_heatmap(spike, path);
    const std::string single = slurp(path);
    CHECK(count_occurrences(single, "<rect") == 15);
    CHECK(count_occurrences(single, "rgb(255,255,255)") == 1);
    CHECK(count_occurrences(single, "rgb(0,0,0)") == 14);
    std::remove(path.c_str());

    CHECK_THROWS_AS(emit_mode_heatmap(Mat(), path), DataError);
}

TEST_CASE("reconstruction overlay svg contract") {
    const std::string path = "/tmp/kooptx_overlay_test.svg";
    std::vector<double> trace(250);
    for (size_t i = 0; i < trace.size(); ++i)
        trace[i] = std::sin(2.0 * M_PI * 5.0 * static_cast<double>(i) / 125.0);

    emit_reconstruction_overlay(trace, trace, 125.0, path);
    const std::string svg = slurp(path);
    CHECK(count_occurrences(svg, "<polyline") == 2);
    CHECK(svg.find("NRMSE 0") != std::string::npos);  // identical traces
    // 250 samples at 125 Hz: the time axis reaches 2 seconds.
    CHECK(svg.find(">2<") != std::string::npos);
    CHECK(svg.find("original") != std::string::npos);
    CHECK(svg.find("reconstruction") != std::string::npos);

    std::vector<double> noisy = trace;
    for (double& v : noisy) v += 0.1;
    emit_reconstruction_overlay(trace, noisy, 125.0, path);
    const std::string shifted = slurp(path);
    CHECK(count_occurrences(shifted, "<polyline") == 2);
    CHECK(shifted.find("NRMSE 0.1414") != std::string::npos);  // 0.1/std(sine)
    std::remove(path.c_str());

    CHECK_THROWS_AS(emit_reconstruction_overlay({1.0}, {1.0, 2.0}, 125.0, path),
                    DataError);
    CHECK_THROWS_AS(emit_reconstruction_overlay({}, {}, 125.0, path), DataError);
    CHECK_THROWS_AS(emit_reconstruction_overlay({1.0}, {1.0}, 0.0, path), ConfigError);
}

TEST_CASE("dataset loading errors") {
    CHECK_THROWS_AS(load_dataset("/tmp/kooptx_missing_dir"), DataError);
    const std::string dir = "/tmp/kooptx_badds";
    std::filesystem::create_directories(dir);
    {
        std::ofstream m(dir + "/labels.csv");
        m << "wrong,header\n";
    }
    CHECK_THROWS_AS(load_dataset(dir), DataError);
    {
        std::ofstream m(dir + "/labels.csv");
        m << "file,class\nmissing.csv,Normal sinus rhythm\n";
    }
    CHECK_THROWS_AS(load_dataset(dir), DataError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("pipeline config json") {
    const std::string path = "/tmp/kooptx_cfg_test.json";
    {
        std::ofstream out(path);
        out << "{\"delay\": 12, \"rbf_centers\": 25, \"lr\": 0.001, "
               "\"system\": \"hybrid_tx\", \"max_epochs\": 7}\n";
    }
    const PipelineConfig cfg = load_pipeline_config(path);
    CHECK(cfg.dict.delay == 12);
    CHECK(cfg.dict.rbf_centers == 25);
    CHECK(cfg.train.lr == 0.001);
    CHECK(cfg.train.max_epochs == 7);
    CHECK(cfg.system == "hybrid_tx");
    CHECK(cfg.svd_rank == 16);   // untouched default
    CHECK(cfg.ridge == 1e-4);

    {
        std::ofstream out(path);
        out << "{\"max_epoch\": 7}\n";  // typo must be rejected, not ignored
    }
    CHECK_THROWS_AS(load_pipeline_config(path), ConfigError);
    {
        std::ofstream out(path);
        out << "{\"train_ratio\": 0.9}\n";  // ratios no longer sum to 1
    }
    CHECK_THROWS_AS(load_pipeline_config(path), ConfigError);
    {
        std::ofstream out(path);
        out << "{not json\n";
    }
    CHECK_THROWS_AS(load_pipeline_config(path), ConfigError);
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_pipeline_config("/tmp/kooptx_no_such_cfg.json"), ConfigError);
    CHECK_THROWS_AS(system_from_config_name("koopman"), ConfigError);
    CHECK(system_name(system_from_config_name("koopman_tx_ablated")) ==
          "KoopmanTxAblated");
}

TEST_CASE("run_system report invariants and determinism") {
    const std::vector<RawRecord> records = synth_records(5);
    const PipelineConfig cfg = quick_config();
    const PreparedData data = prepare_data(records, Task::FourClass, cfg);

    const ExperimentReport rep = run_system(SystemKind::WaveletTx, data, cfg, "");
    REQUIRE(rep.runs.size() == 5);
    for (size_t i = 0; i < 5; ++i) CHECK(rep.runs[i].seed == 42 + i);

    // Stored mean must equal the mean of the stored per-run values.
    double mean = 0.0;
    for (const RunResult& r : rep.runs) mean += r.macro_f1;
    mean /= 5.0;
    CHECK(std::fabs(rep.mean_macro_f1 - mean) < 1e-12);
    for (size_t c = 0; c < 4; ++c) {
        double cm = 0.0;
        for (const RunResult& r : rep.runs) cm += r.f1_per_class.at(c);
        CHECK(std::fabs(rep.mean_f1_per_class[c] - cm / 5.0) < 1e-12);
    }

    // Re-running the system reproduces every score bit for bit; the summary
    // file (which carries no timings) is byte-identical.
    const ExperimentReport rep2 = run_system(SystemKind::WaveletTx, data, cfg, "");
    for (size_t i = 0; i < 5; ++i) {
        CHECK(rep.runs[i].macro_f1 == rep2.runs[i].macro_f1);
        CHECK(rep.runs[i].f1_per_class == rep2.runs[i].f1_per_class);
    }
    const std::string s1 = "/tmp/kooptx_sum1.csv", s2 = "/tmp/kooptx_sum2.csv";
    write_summary_csv(s1, {rep});
    write_summary_csv(s2, {rep2});
    CHECK(slurp(s1) == slurp(s2));

    // Report CSV layout: header plus one row per run, wall clock last.
    const std::string rp = "/tmp/kooptx_rep.csv";
    write_report_csv(rp, {rep});
    std::ifstream in(rp);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line ==
          "system, task, run_seed, macro_f1, f1_class_0, f1_class_1, f1_class_2, "
          "f1_class_3, wall_clock_s");
    size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        CHECK(line.rfind("WaveletTx, four, ", 0) == 0);
        ++rows;
    }
    CHECK(rows == 5);
    for (const std::string& p : {s1, s2, rp}) std::remove(p.c_str());

    CHECK_THROWS_AS(write_report_csv("/nonexistent_dir/x.csv", {rep}), DataError);
}

TEST_CASE("ablation grid protocol") {
    // Binary task, 4 records per class: 3 train / 1 val per class and no
    // test rows at all inside the ablation interface.
    const std::vector<RawRecord> records = synth_records(4);
    PipelineConfig cfg = quick_config();
    const PreparedData data = prepare_data(records, Task::Binary, cfg);
    const TrainValView view = trainval_view(data);

    const AblationResult ab = run_ablation(view, cfg);
    REQUIRE(ab.cells.size() == 108);

    // Nested enumeration order: delay -> centers -> sigma -> rank.
    CHECK(ab.cells[0].delay == 4);
    CHECK(ab.cells[0].rbf_centers == 0);
    CHECK(ab.cells[0].rbf_sigma == 0.1);
    CHECK(ab.cells[0].svd_rank == 8);
    CHECK(ab.cells[1].svd_rank == 16);
    CHECK(ab.cells[2].svd_rank == 32);
    CHECK(ab.cells[3].rbf_sigma == 0.3);
    CHECK(ab.cells[9].rbf_centers == 10);
    CHECK(ab.cells[36].delay == 8);
    CHECK(ab.cells[107].delay == 16);
    CHECK(ab.cells[107].rbf_centers == 50);
    CHECK(ab.cells[107].rbf_sigma == 1.0);
    CHECK(ab.cells[107].svd_rank == 32);

    // Winner dominates every scored cell, including the default cell
    // (delay 8, centers 0, sigma 0.3, rank 16 = index 40).
    for (const AblationCell& c : ab.cells)
        if (!std::isnan(c.val_macro_f1)) CHECK(ab.winner.val_macro_f1 >= c.val_macro_f1);
    REQUIRE(!std::isnan(ab.cells[40].val_macro_f1));
    CHECK(ab.winner.val_macro_f1 >= ab.cells[40].val_macro_f1);

    // Without RBF observables sigma is inert: those cells share one score.
    for (int di = 0; di < 3; ++di)
        for (int ri = 0; ri < 3; ++ri) {
            const double base = ab.cells[static_cast<size_t>(di * 36 + ri)].val_macro_f1;
            for (int si = 1; si < 3; ++si) {
                const double other =
                    ab.cells[static_cast<size_t>(di * 36 + si * 3 + ri)].val_macro_f1;
                if (std::isnan(base))
                    CHECK(std::isnan(other));
                else
                    CHECK(other == base);
            }
        }

    // CSV emission: header plus 108 data rows in enumeration order.
    const std::string path = "/tmp/kooptx_ablation_test.csv";
    write_ablation_csv(path, ab);
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "delay, rbf_centers, rbf_sigma, svd_rank, val_macro_f1");
    size_t rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 108);
    std::remove(path.c_str());
}
