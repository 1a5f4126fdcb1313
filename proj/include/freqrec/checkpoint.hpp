#pragma once

#include <filesystem>
#include <iosfwd>

#include "freqrec/model.hpp"

namespace freqrec {

// JSON container: config settings, ablation switches, item count and every
// named parameter with its shape.
void save_checkpoint(const FreqRecModel& model, std::ostream& out);
void save_checkpoint(const FreqRecModel& model, const std::filesystem::path& path);

// Rebuilds the model from the stored config and copies the tensors in.
// Missing, extra or mis-shaped tensors are a ValidationError.
FreqRecModel load_checkpoint(std::istream& in);
FreqRecModel load_checkpoint(const std::filesystem::path& path);

}  // namespace freqrec
