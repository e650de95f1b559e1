#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynsteiner/engine.hpp"
#include "dynsteiner/query.hpp"

namespace steinerctl {

enum ExitCode {
  kOk = 0,
  kUsage = 1,
  kParse = 2,
  kInvalidOp = 3,
  kOracle = 4,
};

enum class LineKind { kInsert, kDelete, kWeight, kRoot, kMember, kNeighbors };

struct WorkloadLine {
  LineKind kind = LineKind::kWeight;
  dynsteiner::GridPoint point;
  int line_number = 0;
};

struct ParseError : std::runtime_error {
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
  int line;
};

// Whitespace-separated, '#' starts a comment. Throws ParseError.
std::vector<WorkloadLine> parse_workload(std::istream& in, int dim);

std::string export_dot(const dynsteiner::Copy& c);
std::string export_jsonl(const dynsteiner::Copy& c);

// Entry point shared by the binary and the tests. args excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace steinerctl
