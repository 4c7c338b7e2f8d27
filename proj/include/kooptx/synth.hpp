#pragma once

#include <cstdint>
#include <string>

#include "kooptx/signal.hpp"

namespace kooptx {

// The four synthetic rhythm classes. The binary task collapses the last
// three into "non-normal".
enum class SynthClass { Normal, AFib, Ventricular, Block };

constexpr SynthClass kSynthClasses[] = {SynthClass::Normal, SynthClass::AFib,
                                        SynthClass::Ventricular, SynthClass::Block};

// Short token used in file names ("normal", "afib", ...).
std::string synth_class_name(SynthClass c);

// Free-text diagnosis line as it would appear in a clinical label column;
// this is what the label-mapping rules parse.
std::string synth_class_diagnosis(SynthClass c);

// Deterministic sum-of-Gaussians rhythm generator.
//   Normal      — P-QRS-T beats, 60–90 bpm, RR jitter ±0.1%
//   AFib        — P suppressed, RR drawn from a shuffled spread palette
//                 (true RR coefficient of variation ≈ 0.21)
//   Ventricular — single wide dome (σ = 0.40·RR) at 100–130 bpm
//   Block       — long flat P-to-QRS interval; every third beat drops the
//                 QRS/T complex but keeps its P wave
// All wave shapes are fixed named constants in the implementation so tests
// can rely on the classes' measurable signatures.
Signal synth_ecg(SynthClass cls, double duration_sec, double fs, uint64_t seed);

// Write one CSV per (class, seed) as `<class>_<seed>.csv` plus a labels.csv
// manifest (`file,class`) into dir. Seeds run base_seed .. base_seed+n-1 for
// each class.
void emit_dataset(const std::string& dir, size_t records_per_class,
                  double duration_sec, double fs, uint64_t base_seed);

}  // namespace kooptx
