#pragma once

#include <filesystem>
#include <vector>

namespace fluxwarn::cli {

/// Stages files under `<name>.partial` and renames them into place on commit().
/// Anything staged but not committed is deleted on destruction.
class OutputSet {
 public:
  OutputSet() = default;
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet();

  /// Returns the staging path to write `final_path` through.
  std::filesystem::path stage(const std::filesystem::path& final_path);
  void commit();

  const std::vector<std::filesystem::path>& final_paths() const { return finals_; }

 private:
  std::vector<std::filesystem::path> finals_;
  std::vector<std::filesystem::path> staged_;
  bool committed_ = false;
};

}  // namespace fluxwarn::cli
