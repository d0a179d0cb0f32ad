#pragma once

#include <array>
#include <string>
#include <vector>

namespace carbideseg {

// One tensor of a binary tensor-container file.
struct NamedTensor {
    std::string name;
    std::array<int, 4> shape{1, 1, 1, 1};
    std::vector<float> data;
};

struct TensorFileContent {
    std::vector<NamedTensor> tensors;
    std::string meta_json;  // free-form metadata, "{}" when absent
};

// Container layout: magic "CSEGTNS1", u64 header length, JSON header
// (tensor index with shapes and byte offsets, plus meta), then raw
// little-endian float32 payloads. Round-trips bit-exactly.
void write_tensor_file(const std::string& path, const TensorFileContent& content);
TensorFileContent read_tensor_file(const std::string& path);

} // namespace carbideseg
