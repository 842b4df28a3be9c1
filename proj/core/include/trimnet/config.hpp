#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "trimnet/dataset.hpp"
#include "trimnet/network.hpp"

namespace trimnet {

// Parses "key = value" lines; '#' starts a comment, blank lines are ignored.
// Later keys override earlier ones. Throws ConfigError naming the line.
std::map<std::string, std::string> parse_key_values(const std::string& text);
std::map<std::string, std::string> load_key_values(const std::string& path);

// Architecture descriptor grammar (';'-separated, whitespace-free):
//   input:<d1>[x<d2>x...]
//   dense:<units>:<activation>
//   conv:<out>:<kh>x<kw>[:<sh>x<sw>[:<ph>x<pw>]]:<activation>
//   maxpool:<h>x<w>[:<sh>x<sw>]
//   flatten
// e.g. "input:784;dense:200:relu;dense:200:relu;dense:10:softmax".
std::string describe_architecture(const Network& net);

// Builds the described network with zero-valued parameters.
Network network_from_architecture(const std::string& descriptor);

// Dataset specs:
//   mnist-idx:<dir>  — IDX files in <dir>, returns (train, test)
//   blobs:<k=v,...>  — keys classes, dim, train, test (samples per class),
//                      sep, seed; e.g. "blobs:classes=3,dim=2,train=100,
//                      test=50,sep=6,seed=7". Test data uses seed+1.
std::pair<Dataset, Dataset> load_dataset_spec(const std::string& spec);

// Number parsing with ConfigError diagnostics naming `what`.
std::size_t parse_size(const std::string& s, const std::string& what);
std::uint64_t parse_uint64(const std::string& s, const std::string& what);
double parse_double(const std::string& s, const std::string& what);

// Comma-separated list of indices, e.g. "0,1,3"; empty string -> empty list.
std::vector<std::size_t> parse_index_list(const std::string& s, const std::string& what);

std::vector<std::string> split(const std::string& s, char delim);

}  // namespace trimnet
