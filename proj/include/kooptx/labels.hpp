#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace kooptx {

enum class Task { Binary, FourClass };

int task_n_classes(Task task);
std::string task_name(Task task);                // "binary" / "four"
Task task_from_name(const std::string& name);    // inverse, ConfigError otherwise
std::vector<std::string> task_class_names(Task task);

// Ordered substring rules over free-text diagnoses: patterns are tried in
// order, first match wins, matching is case-insensitive. Records that match
// nothing are excluded rather than guessed.
struct LabelRule {
    Task task = Task::Binary;
    std::vector<std::pair<std::string, int>> mapping;  // lowercase pattern -> class
};

LabelRule make_label_rule(Task task);

struct LabelResult {
    std::vector<int> labels;    // one per kept record, parallel to `kept`
    std::vector<size_t> kept;   // indices into the input diagnosis list
    size_t excluded = 0;
};

LabelResult generate_labels(const std::vector<std::string>& diagnoses,
                            const LabelRule& rule);

}  // namespace kooptx
