#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fairrag/config.hpp"

namespace fairrag {

struct IngestArgs {
  std::filesystem::path corpus;
  std::filesystem::path out_dir;
  bool lenient = false;
  bool json = false;
};

struct AskArgs {
  std::string question;
  std::optional<int> max_iter;
  std::filesystem::path trace_out;  // appended as JSONL when set
  std::optional<std::string> backend;
  std::optional<std::string> script;
  bool json = false;
};

struct EvalArgs {
  std::filesystem::path dataset;
  std::filesystem::path out;  // results JSONL, optional
  bool iterative = false;
  std::size_t jobs = 1;
  bool json = false;
};

struct ReportArgs {
  std::optional<std::filesystem::path> results;
  bool json = false;
};

/// Each command returns the process exit code; errors go to `err`.
int cmd_ingest(const Config& config, const IngestArgs& args, std::ostream& out, std::ostream& err);
int cmd_ask(const Config& config, const AskArgs& args, std::ostream& out, std::ostream& err);
int cmd_eval(const Config& config, const EvalArgs& args, std::ostream& out, std::ostream& err);
int cmd_report(const Config& config, const ReportArgs& args, std::ostream& out, std::ostream& err);

/// Full command line: global flags --config --json --jobs, then a command.
int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace fairrag
