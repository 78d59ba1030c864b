#pragma once

#include <filesystem>
#include <string>

#include "forge/types.hpp"

namespace forge::io {

// --- PNG (8-bit RGB; the deployment form of images) ---
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

// --- In-memory JPEG round trip (real lossy codec; quality in [1,100]) ---
Image jpeg_roundtrip(const Image& img, int quality);

// --- Exact tensors: little-endian float32 raw + JSON shape sidecar ---
void write_f32(const std::filesystem::path& path, const Image& img);
Image read_f32(const std::filesystem::path& path);

// Raw float vector variant used for model weights.
void write_f32_raw(const std::filesystem::path& path, const std::vector<float>& data);
std::vector<float> read_f32_raw(const std::filesystem::path& path);

// --- QA datasets: JSON Lines + sidecar header ("<path>.meta.json") ---
void write_dataset(const std::filesystem::path& jsonl_path, const QADataset& ds);
QADataset read_dataset(const std::filesystem::path& jsonl_path);

// --- Attack artifacts: directory with base.png, perturbed.png, perturbed.f32,
//     manifest.json, loss_trace.csv ---
void write_artifact(const std::filesystem::path& dir, const AttackArtifact& artifact);
AttackArtifact read_artifact(const std::filesystem::path& dir);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace forge::io
