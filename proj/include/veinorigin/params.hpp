#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "veinorigin/arch.hpp"
#include "veinorigin/error.hpp"
#include "veinorigin/zoo.hpp"

namespace veinorigin {

struct LayerParams {
  std::string id;
  std::int64_t trainable = 0;
  std::int64_t non_trainable = 0;
};

struct ParameterCount {
  std::int64_t total = 0;
  std::int64_t trainable = 0;
  std::int64_t non_trainable = 0;
  std::vector<LayerParams> per_layer;
};

/// Closed-form parameter counts per layer kind:
///   conv:            k*k*Cin*Cout (+ Cout bias)
///   separable_conv:  k*k*Cin + Cin*Cout (+ Cout bias)
///   batch_norm:      2C trainable, 2C non-trainable running statistics
///   fully_connected: Cin*Cout (+ Cout bias)
inline ParameterCount count_parameters(const ArchitectureConfig& arch) {
  infer_shapes(arch);  // rejects inconsistent graphs
  ParameterCount pc;
  for (const auto& n : arch.nodes) {
    LayerParams lp;
    lp.id = n.id;
    const std::int64_t k = n.kernel, cin = n.in_channels, cout = n.out_channels;
    switch (n.kind) {
      case LayerKind::conv:
        lp.trainable = k * k * cin * cout + (n.bias ? cout : 0);
        break;
      case LayerKind::separable_conv:
        lp.trainable = k * k * cin + cin * cout + (n.bias ? cout : 0);
        break;
      case LayerKind::batch_norm:
        lp.trainable = 2 * cin;
        lp.non_trainable = 2 * cin;
        break;
      case LayerKind::fully_connected:
        lp.trainable = cin * cout + (n.bias ? cout : 0);
        break;
      default:
        break;
    }
    if (lp.trainable == 0 && lp.non_trainable == 0) continue;
    pc.trainable += lp.trainable;
    pc.non_trainable += lp.non_trainable;
    pc.per_layer.push_back(std::move(lp));
  }
  pc.total = pc.trainable + pc.non_trainable;
  return pc;
}

/// "<n> Conv + <m> FC" where n counts conv and separable_conv nodes.
inline std::string weighted_layers_string(const ArchitectureConfig& arch) {
  int convs = 0, fcs = 0;
  for (const auto& n : arch.nodes) {
    if (n.kind == LayerKind::conv || n.kind == LayerKind::separable_conv) ++convs;
    if (n.kind == LayerKind::fully_connected) ++fcs;
  }
  return std::to_string(convs) + " Conv + " + std::to_string(fcs) + " FC";
}

struct ComplexityRow {
  std::string name;
  std::int64_t total = 0;
  std::int64_t trainable = 0;
  std::string layers;
};

inline std::vector<ComplexityRow> complexity_table(const std::vector<std::string>& names,
                                                   int num_classes = 8,
                                                   std::array<int, 3> input_shape = {96, 96, 1}) {
  std::vector<ComplexityRow> rows;
  for (const auto& name : names) {
    const ArchitectureConfig arch = build_architecture(name, num_classes, input_shape);
    const ParameterCount pc = count_parameters(arch);
    rows.push_back({name, pc.total, pc.trainable, weighted_layers_string(arch)});
  }
  return rows;
}

inline std::string group_digits(std::int64_t v) {
  std::string s = std::to_string(v);
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(i, ",");
  return s;
}

/// Aligned text table mirroring the complexity-table columns.
inline std::string format_complexity_table(const std::vector<ComplexityRow>& rows) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10s %15s %18s   %s\n", "CNN Model", "Total params",
                "Trainable params", "Number of Layers");
  out += buf;
  out += std::string(62, '-') + "\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-10s %15s %18s   %s\n", r.name.c_str(),
                  group_digits(r.total).c_str(), group_digits(r.trainable).c_str(),
                  r.layers.c_str());
    out += buf;
  }
  return out;
}

inline void write_complexity_csv(const std::vector<ComplexityRow>& rows,
                                 const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(errc::write_error, "cannot write complexity table: " + path.string());
  out << "name,total_params,trainable_params,layers\n";
  for (const auto& r : rows)
    out << r.name << "," << r.total << "," << r.trainable << ",\"" << r.layers << "\"\n";
}

}  // namespace veinorigin
