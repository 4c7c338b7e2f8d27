#include "kooptx/labels.hpp"

#include <algorithm>
#include <cctype>

#include "kooptx/errors.hpp"

namespace kooptx {

namespace {

std::string lowercase(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

int task_n_classes(Task task) { return task == Task::Binary ? 2 : 4; }

std::string task_name(Task task) { return task == Task::Binary ? "binary" : "four"; }

Task task_from_name(const std::string& name) {
    if (name == "binary") return Task::Binary;
    if (name == "four") return Task::FourClass;
    throw ConfigError("unknown task '" + name + "' (expected binary or four)");
}

std::vector<std::string> task_class_names(Task task) {
    if (task == Task::Binary) return {"normal", "abnormal"};
    return {"normal", "afib", "ventricular", "block"};
}

LabelRule make_label_rule(Task task) {
    LabelRule rule;
    rule.task = task;
    if (task == Task::Binary) {
        rule.mapping = {
            {"normal sinus", 0}, {"fibrillation", 1}, {"ventricular", 1},
            {"block", 1},        {"arrhythm", 1},
        };
    } else {
        // Compound diagnoses like "atrioventricular block" contain the word
        // "ventricular", so the block patterns must be tried first.
        rule.mapping = {
            {"normal sinus", 0},     {"atrial fibrillation", 1},
            {"atrioventricular", 3}, {"bundle branch", 3},
            {"block", 3},            {"ventricular", 2},
        };
    }
    return rule;
}

LabelResult generate_labels(const std::vector<std::string>& diagnoses,
                            const LabelRule& rule) {
    if (rule.mapping.empty()) throw ConfigError("generate_labels: empty label rule");
    LabelResult out;
    for (size_t i = 0; i < diagnoses.size(); ++i) {
        const std::string text = lowercase(diagnoses[i]);
        int label = -1;
        for (const auto& [pattern, cls] : rule.mapping) {
            if (text.find(pattern) != std::string::npos) {
                label = cls;
                break;
            }
        }
        if (label < 0) {
            ++out.excluded;
        } else {
            out.labels.push_back(label);
            out.kept.push_back(i);
        }
    }
    return out;
}

}  // namespace kooptx
