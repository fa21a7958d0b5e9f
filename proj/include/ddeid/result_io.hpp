#ifndef DDEID_RESULT_IO_HPP
#define DDEID_RESULT_IO_HPP

#include "ddeid/reconstruct.hpp"

#include <optional>
#include <string>

namespace ddeid {

inline constexpr int result_format_version = 1;

struct DocumentOptions
{
    bool record_timing = false; // wall times make documents differ between identical runs
    std::optional<SuccessReport> score;
};

/// Structured result document (JSON, 2-space indent, trailing newline).
std::string result_to_json(const ReconstructedSystem& result, const DocumentOptions& options = {});

/// Parses a document written by result_to_json. Rendered strings and scores are ignored.
ReconstructedSystem result_from_json(const std::string& text);

void save_result(const std::string& path, const ReconstructedSystem& result, const DocumentOptions& options = {});
ReconstructedSystem load_result(const std::string& path);

} // namespace ddeid

#endif
