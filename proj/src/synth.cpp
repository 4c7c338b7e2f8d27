#include "kooptx/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "kooptx/errors.hpp"
#include "kooptx/rng.hpp"

namespace kooptx {

namespace {

// One Gaussian bump: amplitude, center offset, width. Offsets/widths for the
// periodic classes are in fractions of the current RR interval; Block uses
// absolute seconds where noted.
struct Wave {
    double amp, off, sig;
};

// P, R, T of a normal beat (offset and width as fractions of RR). Tuned once
// so that (a) a rank-16 polynomial Koopman model reconstructs 2 s windows to
// NRMSE ≤ 0.10 even at the slow end of the rate range and (b) the four
// classes stay separable by the (RR spread, QRS width) rule the tests use.
constexpr Wave kNormalWaves[] = {
    {0.3257, -0.4033, 0.1560},  // P
    {1.0000, 0.0000, 0.1580},   // R
    {0.2267, 0.5117, 0.1233},   // T
};

// RR multipliers for AFib, reshuffled every 8 beats. Mean 1.0175, coefficient
// of variation ≈ 0.21 — irregular enough to clear the 0.15 contract line yet
// clearly below the dropped-beat spread of Block.
constexpr double kAfibPalette[] = {0.70, 0.78, 0.88, 0.96, 1.06, 1.16, 1.26, 1.34};

int class_index(SynthClass c) { return static_cast<int>(c); }

}  // namespace

std::string synth_class_name(SynthClass c) {
    switch (c) {
        case SynthClass::Normal: return "normal";
        case SynthClass::AFib: return "afib";
        case SynthClass::Ventricular: return "ventricular";
        default: return "block";
    }
}

std::string synth_class_diagnosis(SynthClass c) {
    switch (c) {
        case SynthClass::Normal: return "Normal sinus rhythm";
        case SynthClass::AFib: return "Atrial fibrillation";
        case SynthClass::Ventricular: return "Ventricular arrhythmia";
        default: return "Atrioventricular block";
    }
}

Signal synth_ecg(SynthClass cls, double duration_sec, double fs, uint64_t seed) {
    if (!(duration_sec >= 4.0)) throw ConfigError("synth_ecg: duration must be >= 4 s");
    if (!(fs >= 50.0)) throw ConfigError("synth_ecg: fs must be >= 50 Hz");

    Rng rng(seed * 4 + static_cast<uint64_t>(class_index(cls)));
    const auto n = static_cast<size_t>(std::llround(duration_sec * fs));
    std::vector<double> x(n, 0.0);

    struct Ev {
        double mu, amp, sig;
    };
    std::vector<Ev> ev;

    if (cls == SynthClass::Normal || cls == SynthClass::AFib) {
        const bool afib = cls == SynthClass::AFib;
        const double base =
            60.0 / (afib ? rng.uniform(65.0, 85.0) : rng.uniform(60.0, 90.0));
        std::vector<double> pal;
        double tb = -1.5;
        size_t k = 0;
        while (tb < duration_sec + 1.5) {
            double rr;
            if (afib) {
                if (k % 8 == 0) {
                    pal.assign(std::begin(kAfibPalette), std::end(kAfibPalette));
                    rng.shuffle(pal);
                }
                rr = base * pal[k % 8] * (1.0 + rng.uniform(-0.02, 0.02));
            } else {
                rr = base * (1.0 + rng.uniform(-0.001, 0.001));
            }
            const Wave* first = afib ? kNormalWaves + 1 : kNormalWaves;  // AFib: no P
            for (const Wave* w = first; w != std::end(kNormalWaves); ++w)
                ev.push_back({tb + w->off * rr, w->amp, w->sig * rr});
            tb += rr;
            ++k;
        }
    } else if (cls == SynthClass::Ventricular) {
        const double base = 60.0 / rng.uniform(100.0, 130.0);
        double tb = -1.5;
        while (tb < duration_sec + 1.5) {
            const double rr = base * (1.0 + rng.uniform(-0.02, 0.02));
            ev.push_back({tb, 1.0, 0.40 * rr});               // wide fused dome
            ev.push_back({tb + 0.52 * rr, -0.12, 0.13 * rr});  // shallow T inversion
            tb += rr;
        }
    } else {  // Block
        const double base = 60.0 / rng.uniform(70.0, 85.0);
        double tb = -1.5;
        size_t k = 0;
        while (tb < duration_sec + 1.5) {
            const double rr = base * (1.0 + rng.uniform(-0.015, 0.015));
            ev.push_back({tb - 0.42 * rr, 0.13, 0.035});  // P, long lead-in
            if (k % 3 != 2) {  // every third QRS/T complex is dropped
                ev.push_back({tb, 1.0, 0.032});
                ev.push_back({tb + 0.07, -0.20, 0.022});
                ev.push_back({tb + 0.26, 0.32, 0.060});
            }
            tb += rr;
            ++k;
        }
    }

    for (const Ev& e : ev) {
        const auto lo = std::max<long long>(0, static_cast<long long>((e.mu - 5.0 * e.sig) * fs));
        const auto hi = std::min<long long>(
            static_cast<long long>(n),
            static_cast<long long>((e.mu + 5.0 * e.sig) * fs) + 1);
        for (long long i = lo; i < hi; ++i) {
            const double z = (static_cast<double>(i) / fs - e.mu) / e.sig;
            x[static_cast<size_t>(i)] += e.amp * std::exp(-0.5 * z * z);
        }
    }

    return Signal{std::move(x), fs};
}

void emit_dataset(const std::string& dir, size_t records_per_class,
                  double duration_sec, double fs, uint64_t base_seed) {
    if (records_per_class == 0)
        throw ConfigError("emit_dataset: records_per_class must be positive");
    std::filesystem::create_directories(dir);

    std::FILE* manifest = std::fopen((dir + "/labels.csv").c_str(), "w");
    if (!manifest) throw DataError("cannot write " + dir + "/labels.csv");
    std::fputs("file,class\n", manifest);

    for (SynthClass cls : kSynthClasses) {
        for (size_t i = 0; i < records_per_class; ++i) {
            const uint64_t seed = base_seed + i;
            const std::string name =
                synth_class_name(cls) + "_" + std::to_string(seed) + ".csv";
            write_signal_csv(dir + "/" + name, synth_ecg(cls, duration_sec, fs, seed));
            std::fprintf(manifest, "%s,%s\n", name.c_str(),
                         synth_class_diagnosis(cls).c_str());
        }
    }
    std::fclose(manifest);
}

}  // namespace kooptx
