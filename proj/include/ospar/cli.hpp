#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ospar/decoder.hpp"
#include "ospar/parser.hpp"
#include "ospar/treebank.hpp"

namespace ospar {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `ospar` executable. Streams are injectable so tests can
/// drive every subcommand in-process.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

/// One sentence of space-separated word_TAG tokens. The tag is taken after the
/// last underscore; tokens without one get the tag "XX".
Sentence parse_tagged_line(const std::string& line);

struct BenchResult {
  Objective objective = Objective::Ordered;
  std::vector<double> seconds;  // one entry per repetition
  double mean_rate = 0.0;       // sentences per second from the mean time; 0 when nothing was parsed
  double median_rate = 0.0;
};

/// Parsing throughput per objective. After one untimed warm-up pass per mode,
/// each repetition times every mode once, in rotating order, so slow drift of
/// the machine affects all modes alike.
std::vector<BenchResult> bench_modes(const Parser& parser, const std::vector<Sentence>& sentences,
                                     const std::vector<Objective>& objectives, int repetitions, int threads);

}  // namespace ospar
