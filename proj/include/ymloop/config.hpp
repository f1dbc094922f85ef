#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ymloop/group.hpp"
#include "ymloop/lattice.hpp"
#include "ymloop/loops.hpp"
#include "ymloop/samplers.hpp"

namespace ymloop {

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class Command { verify, sample, enumerate, oracle, check_sde };

std::string to_string(Command c);
Command parse_command(const std::string& text);

/// Resolved run configuration. Every field has a documented default; the text
/// form produced by to_config_text() parses back to an equal RunConfig.
struct RunConfig {
  Command command = Command::verify;
  GroupKind group = GroupKind::SU;
  int n = 2;
  std::vector<double> betas{0.0};
  int dim = 2;
  Coords lo{0, 0};
  Coords hi{4, 3};
  /// Loop sequences in text syntax; several sequences are separated by '|'.
  std::vector<std::string> sequences{"(1,1) +x +y -x -y"};

  Scheme scheme = Scheme::metropolis;
  double langevin_step = kDefaultLangevinStep;
  double proposal_scale = 0.0;  // <= 0: 0.5 / sqrt(N (1 + |beta|))
  int burn_in = 1000;
  long n_samples = 10000;
  int thinning = 1;
  std::uint64_t seed = 1;
  int n_chains = 1;
  int batches = 40;

  int seeds = 3;  // independent replicates per verify cell
  bool extrapolate = false;
  double n_sigma = 3.0;

  int n_points = 32;
  int gauge_root = 0;

  long sde_samples = 100000;
  int magic_pairs = 5;
  double sde_h = 0.01;

  std::string output = "-";
  std::string csv;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  GroupSpec group_spec() const { return GroupSpec(group, n); }
  Lattice lattice() const { return Lattice(dim, lo, hi); }
  /// Sampler settings for the configured scheme at a given beta.
  ChainConfig chain(double beta) const;
  ChainConfig chain(Scheme s, double beta) const;
};

/// Recognized keys in canonical order.
const std::vector<std::string>& config_keys();

/// key = value lines; '#' starts a comment; blank lines ignored. Throws ConfigError
/// on malformed lines, unknown or repeated keys.
std::map<std::string, std::string> parse_key_values(std::string_view text);

/// Applies the values over the defaults and validates (group, lattice, loops,
/// padding for verify). Throws ConfigError with a message naming the key.
RunConfig make_config(const std::map<std::string, std::string>& values);
RunConfig parse_config(std::string_view text);

/// Canonical key = value text with every default materialized.
std::string to_config_text(const RunConfig& cfg);
std::map<std::string, std::string> to_key_values(const RunConfig& cfg);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

}  // namespace ymloop
