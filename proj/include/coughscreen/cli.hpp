#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "coughscreen/config.hpp"
#include "coughscreen/feature_table.hpp"

namespace coughscreen::cli {

/// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
int exit_code(const Error& e);

/// Parses argv and dispatches; never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

void cmd_synth(const config::RunConfig& cfg, std::ostream& out);
void cmd_extract(const config::RunConfig& cfg, std::ostream& out, std::ostream& err);
void cmd_evaluate(const config::RunConfig& cfg, std::ostream& out, std::ostream& err);
void cmd_sfs(const config::RunConfig& cfg, std::ostream& out, std::ostream& err);
void cmd_report(const std::filesystem::path& run_dir, const config::RunConfig& cfg,
                std::ostream& out);

/// Feature table from [features] table, or extracted from the corpus.
features::FeatureTable load_table(const config::RunConfig& cfg, std::ostream& err);

}  // namespace coughscreen::cli
