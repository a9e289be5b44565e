#pragma once

#include "fkbench/model.hpp"

#include <map>
#include <string>
#include <vector>

namespace fkbench {

using ZooParams = std::map<std::string, double>;

/// A ready-to-run model with its McKean weights and default test function.
struct ZooEntry
{
    std::string name;
    ZooParams params; // fully resolved, defaults included
    FeynmanKacModel model;
    McKeanSpec spec;
    TestFunction function;
    std::string notes;
};

struct ZooListing
{
    std::string name;
    ZooParams defaults;
    std::string notes;
};

/// Longest horizon accepted by the path-space expansion (d_n = 2^{n+1}).
inline constexpr int kMaxPathHorizon = 8;

std::vector<ZooListing> zoo_list();

/// Builds a zoo entry; params override the defaults listed by zoo_list().
/// Throws UnknownEntry for unknown names or parameters.
ZooEntry build(const std::string& name, const ZooParams& params = {});

/// Positional code of a path (x_0, ..., x_n), x_0 least significant.
long long encode_path(const std::vector<int>& path, int base);
std::vector<int> decode_path(long long code, int length, int base);

/// Expands a time-homogeneous-space chain with potentials G' into the path
/// chain on E'_0 x ... x E'_n with terminal-value potentials.
FeynmanKacModel path_space_model(const FeynmanKacModel& base);

/// Synthetic observation sequence used by binary_hmm, fixed by its seed.
std::vector<double> binary_hmm_observations(const ZooParams& params);

} // namespace fkbench
