#include "output_set.hpp"

#include "fluxwarn/error.hpp"

namespace fluxwarn::cli {

OutputSet::~OutputSet() {
  if (committed_) return;
  std::error_code ec;
  for (const auto& p : staged_) std::filesystem::remove(p, ec);
}

std::filesystem::path OutputSet::stage(const std::filesystem::path& final_path) {
  if (final_path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(final_path.parent_path(), ec);
    if (ec) {
      throw Error(ErrorKind::Io, "cannot create '" + final_path.parent_path().string() + "'");
    }
  }
  auto staged = final_path;
  staged += ".partial";
  finals_.push_back(final_path);
  staged_.push_back(staged);
  return staged;
}

void OutputSet::commit() {
  for (std::size_t i = 0; i < staged_.size(); ++i) {
    std::error_code ec;
    std::filesystem::rename(staged_[i], finals_[i], ec);
    if (ec) {
      for (std::size_t j = 0; j < i; ++j) std::filesystem::remove(finals_[j], ec);
      throw Error(ErrorKind::Io, "cannot move output into '" + finals_[i].string() + "'");
    }
  }
  committed_ = true;
}

}  // namespace fluxwarn::cli
