#pragma once

#include <string>

#include "softtree/model.hpp"

namespace softtree {

inline constexpr int kModelFormatVersion = 1;

// Writes the model as a structured text document with stable key order
// and round-trip-exact decimal encoding of every weight, so that
// load(save(m)) predicts bit-identically and re-saving is byte-stable.
void save_model(const Model& model, const std::string& path);

// Parses and validates against all model invariants (shape consistency,
// finiteness, known version).
Model load_model(const std::string& path);

std::string model_to_string(const Model& model);
Model model_from_string(const std::string& text, const std::string& origin = "<memory>");

}  // namespace softtree
