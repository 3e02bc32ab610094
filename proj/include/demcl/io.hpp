#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "demcl/radarproc.hpp"
#include "demcl/tensor.hpp"

namespace demcl {

/// Error for malformed or truncated binary files.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// RDF1 frame files: magic "RDF1", then little-endian u32 K, u32 L,
// u32 frame_count, f32 frame_rate; payload holds the frames in order,
// chirp-major (l outer, k inner), each sample as two f32 (re, im).
void write_rdf1(const std::filesystem::path& path, const std::vector<RadarFrame>& frames);
std::vector<RadarFrame> read_rdf1(const std::filesystem::path& path);

// RDM1 / TDS1 matrix files: magic, u32 rows, u32 cols, f32 payload
// row-major, little-endian. A file may carry several records back to
// back; readers consume records until end of file.
void write_rdm1(const std::filesystem::path& path, const std::vector<RealMat>& mats);
std::vector<RealMat> read_rdm1(const std::filesystem::path& path);

/// TDS record: rows = profile count n, cols = Doppler bins D, row i = e_i.
void write_tds1(const std::filesystem::path& path, const RealMat& tds);
RealMat read_tds1(const std::filesystem::path& path);

/// Writes via a temporary file in the same directory plus an atomic
/// rename, so interrupted runs never leave partial files behind.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);

/// Simple key=value sidecar metadata (one pair per line).
void write_sidecar(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, std::string>>& kv);
std::vector<std::pair<std::string, std::string>> read_sidecar(const std::filesystem::path& path);
std::string sidecar_value(const std::vector<std::pair<std::string, std::string>>& kv,
                          const std::string& key);

}  // namespace demcl
