#ifndef PWC_CLI_HPP
#define PWC_CLI_HPP

#include "pwc/image.hpp"
#include "pwc/imgio.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pwc {

/// Invalid command-line input; maps to exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;  // optimal | hier | segment | compare | verify
  std::filesystem::path input;
  std::filesystem::path out = ".";
  std::size_t max_clusters = 1000;
  std::string criterion = "all";  // plain | additive | flsa | extended | all
  double lambda = 0;
  std::optional<std::filesystem::path> mask;
  std::vector<std::size_t> levels;
  SeriesMode mode = SeriesMode::error;
};

enum ExitCode : int { kSuccess = 0, kInvariantFailure = 1, kUsageError = 2 };

/// Throws UsageError on out-of-range settings.
void validate(const RunConfig& config);

/// "2,4,8" -> {2, 4, 8}; throws UsageError.
std::vector<std::size_t> parse_levels(const std::string& text);

/// Box-averages blocks of `factor` x `factor` pixels (half-to-even) and
/// replicates each block mean back to full size.
IntImage block_mask(const IntImage& image, std::size_t factor);

int cmd_optimal(const RunConfig& config, std::ostream& log);
int cmd_hier(const RunConfig& config, std::ostream& log);
int cmd_segment(const RunConfig& config, std::ostream& log);
int cmd_compare(const RunConfig& config, std::ostream& log);
int cmd_verify(const RunConfig& config, std::ostream& log);

/// Dispatches on config.command and converts errors to exit codes.
int run(const RunConfig& config, std::ostream& log, std::ostream& err);

}  // namespace pwc

#endif  // PWC_CLI_HPP
