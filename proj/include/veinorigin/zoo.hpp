#pragma once

#include <array>
#include <string>
#include <vector>

#include "veinorigin/arch.hpp"
#include "veinorigin/error.hpp"

namespace veinorigin {

namespace detail {

inline LayerSpec conv(std::string id, int kernel, int stride, Padding pad, int cin, int cout,
                      bool bias = true) {
  LayerSpec s;
  s.id = std::move(id);
  s.kind = LayerKind::conv;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = pad;
  s.in_channels = cin;
  s.out_channels = cout;
  s.bias = bias;
  return s;
}

inline LayerSpec sep_conv(std::string id, int kernel, int stride, Padding pad, int cin, int cout,
                          bool bias = true) {
  LayerSpec s = conv(std::move(id), kernel, stride, pad, cin, cout, bias);
  s.kind = LayerKind::separable_conv;
  return s;
}

inline LayerSpec bn(std::string id, int channels) {
  LayerSpec s;
  s.id = std::move(id);
  s.kind = LayerKind::batch_norm;
  s.in_channels = channels;
  s.out_channels = channels;
  return s;
}

inline LayerSpec relu(std::string id) {
  LayerSpec s;
  s.id = std::move(id);
  s.kind = LayerKind::relu;
  return s;
}

inline LayerSpec max_pool(std::string id, int kernel, int stride, Padding pad = Padding::same) {
  LayerSpec s;
  s.id = std::move(id);
  s.kind = LayerKind::max_pool;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = pad;
  return s;
}

inline LayerSpec gap(std::string id) {
  LayerSpec s;
  s.id = std::move(id);
  s.kind = LayerKind::global_avg_pool;
  return s;
}

inline LayerSpec fc(std::string id, int cin, int cout, bool bias = true) {
  LayerSpec s;
  s.id = std::move(id);
  s.kind = LayerKind::fully_connected;
  s.in_channels = cin;
  s.out_channels = cout;
  s.bias = bias;
  return s;
}

inline LayerSpec softmax(std::string id) {
  LayerSpec s;
  s.id = std::move(id);
  s.kind = LayerKind::softmax;
  return s;
}

inline LayerSpec add(std::string id) {
  LayerSpec s;
  s.id = std::move(id);
  s.kind = LayerKind::add;
  return s;
}

}  // namespace detail

/// FV2021: 7x7/32/s2 stem, one identity-skip block, one conv-shortcut
/// residual block widening to 512, global average pooling and a single
/// softmax head. The hidden fully connected layer is optional and off by
/// default, matching the "6 Conv + 1 FC" complexity row.
inline ArchitectureConfig fv2021(int num_classes = 8, std::array<int, 3> input_shape = {96, 96, 1},
                                 bool hidden_fc = false) {
  using namespace detail;
  if (num_classes < 2) raise(errc::invalid_argument, "num_classes must be >= 2");
  GraphBuilder g("fv2021", input_shape, num_classes);
  g.node(conv("stem_conv", 7, 2, Padding::same, input_shape[2], 32));
  g.node(bn("stem_bn", 32));
  g.node(relu("stem_relu"));

  // Block 1: two separable convolutions with an identity skip.
  g.node(sep_conv("b1_sep1", 3, 1, Padding::same, 32, 32));
  g.node(bn("b1_bn1", 32));
  g.node(relu("b1_relu1"));
  g.node(sep_conv("b1_sep2", 3, 1, Padding::same, 32, 32));
  g.node(bn("b1_bn2", 32));
  g.node(add("b1_add"));
  g.edge("stem_relu", "b1_add");
  g.node(relu("b1_relu"));

  // Block 2: separable convolutions to 512 channels with a 1x1 conv shortcut.
  g.node(sep_conv("b2_sep1", 3, 2, Padding::same, 32, 512));
  g.node(bn("b2_bn1", 512));
  g.node(relu("b2_relu1"));
  g.node(sep_conv("b2_sep2", 3, 1, Padding::same, 512, 512));
  g.node(bn("b2_bn2", 512));
  g.node(conv("b2_shortcut", 1, 2, Padding::same, 32, 512), "b1_relu");
  g.node(add("b2_add"), "b2_bn2");
  g.edge("b2_shortcut", "b2_add");
  g.node(relu("b2_relu"));

  g.node(gap("gap"));
  int head_in = 512;
  if (hidden_fc) {
    g.node(fc("fc_hidden", 512, 512));
    g.node(relu("fc_hidden_relu"));
    head_in = 512;
  }
  g.node(fc("fc", head_in, num_classes));
  g.node(softmax("softmax"));
  return g.build();
}

/// Four stacked convolutions and two fully connected layers; the SVM head of
/// the original is replaced by softmax.
inline ArchitectureConfig bondi(int num_classes = 8, std::array<int, 3> input_shape = {96, 96, 1}) {
  using namespace detail;
  GraphBuilder g("bondi", input_shape, num_classes);
  g.node(conv("conv1", 4, 1, Padding::same, input_shape[2], 32));
  g.node(bn("bn1", 32));
  g.node(relu("relu1"));
  g.node(max_pool("pool1", 2, 2));
  g.node(conv("conv2", 5, 1, Padding::same, 32, 48));
  g.node(relu("relu2"));
  g.node(max_pool("pool2", 2, 2));
  g.node(conv("conv3", 5, 1, Padding::same, 48, 64));
  g.node(relu("relu3"));
  g.node(max_pool("pool3", 2, 2));
  g.node(conv("conv4", 5, 1, Padding::same, 64, 128));
  g.node(relu("relu4"));
  const int fh = conv_out_extent(conv_out_extent(conv_out_extent(input_shape[0], 2, 2, Padding::same), 2, 2, Padding::same), 2, 2, Padding::same);
  const int fw = conv_out_extent(conv_out_extent(conv_out_extent(input_shape[1], 2, 2, Padding::same), 2, 2, Padding::same), 2, 2, Padding::same);
  g.node(fc("fc1", fh * fw * 128, 128));
  g.node(relu("relu5"));
  g.node(fc("fc2", 128, num_classes));
  g.node(softmax("softmax"));
  return g.build();
}

/// AlexNet-family stack with two wide fully connected layers (1024 and 2048
/// units) ahead of the softmax head.
inline ArchitectureConfig marra(int num_classes = 8, std::array<int, 3> input_shape = {96, 96, 1}) {
  using namespace detail;
  GraphBuilder g("marra", input_shape, num_classes);
  g.node(conv("conv1", 5, 1, Padding::valid, input_shape[2], 64));
  g.node(relu("relu1"));
  g.node(max_pool("pool1", 2, 2));
  g.node(conv("conv2", 5, 1, Padding::valid, 64, 128));
  g.node(relu("relu2"));
  g.node(max_pool("pool2", 2, 2));
  g.node(conv("conv3", 3, 1, Padding::same, 128, 128));
  g.node(relu("relu3"));
  auto spatial = [&](int in) {
    int v = conv_out_extent(in, 5, 1, Padding::valid);
    v = conv_out_extent(v, 2, 2, Padding::same);
    v = conv_out_extent(v, 5, 1, Padding::valid);
    v = conv_out_extent(v, 2, 2, Padding::same);
    return v;
  };
  g.node(fc("fc1", spatial(input_shape[0]) * spatial(input_shape[1]) * 128, 1024));
  g.node(relu("relu4"));
  g.node(fc("fc2", 1024, 2048));
  g.node(relu("relu5"));
  g.node(fc("fc3", 2048, num_classes));
  g.node(softmax("softmax"));
  return g.build();
}

/// VGG16 configuration B with the 512-channel convolutions reduced from four
/// to two (one per stage), batch normalization after every weighted layer
/// except the head.
inline ArchitectureConfig vgg16b(int num_classes = 8, std::array<int, 3> input_shape = {96, 96, 1}) {
  using namespace detail;
  GraphBuilder g("vgg16b", input_shape, num_classes);
  int idx = 0;
  int cin = input_shape[2];
  auto stage = [&](int channels, int convs) {
    for (int i = 0; i < convs; ++i) {
      ++idx;
      const std::string tag = std::to_string(idx);
      g.node(conv("conv" + tag, 3, 1, Padding::same, cin, channels));
      g.node(bn("bn" + tag, channels));
      g.node(relu("relu" + tag));
      cin = channels;
    }
    g.node(max_pool("pool" + std::to_string(idx), 2, 2));
  };
  stage(64, 2);
  stage(128, 2);
  stage(256, 2);
  stage(512, 1);
  stage(512, 1);
  int fh = input_shape[0], fw = input_shape[1];
  for (int i = 0; i < 5; ++i) {
    fh = conv_out_extent(fh, 2, 2, Padding::same);
    fw = conv_out_extent(fw, 2, 2, Padding::same);
  }
  g.node(fc("fc1", fh * fw * 512, 4096));
  g.node(bn("fc1_bn", 4096));
  g.node(relu("fc1_relu"));
  g.node(fc("fc2", 4096, 4096));
  g.node(bn("fc2_bn", 4096));
  g.node(relu("fc2_relu"));
  g.node(fc("fc3", 4096, num_classes));
  g.node(softmax("softmax"));
  return g.build();
}

/// Canonical 50-layer residual network with bottleneck blocks, adapted to a
/// single-channel input and an 8-class head.
inline ArchitectureConfig resnet50(int num_classes = 8,
                                   std::array<int, 3> input_shape = {96, 96, 1}) {
  using namespace detail;
  GraphBuilder g("resnet50", input_shape, num_classes);
  g.node(conv("stem_conv", 7, 2, Padding::same, input_shape[2], 64));
  g.node(bn("stem_bn", 64));
  g.node(relu("stem_relu"));
  g.node(max_pool("stem_pool", 3, 2));

  const int stage_blocks[4] = {3, 4, 6, 3};
  const int stage_mid[4] = {64, 128, 256, 512};
  int cin = 64;
  for (int s = 0; s < 4; ++s) {
    const int mid = stage_mid[s];
    const int cout = mid * 4;
    for (int b = 0; b < stage_blocks[s]; ++b) {
      const std::string p = "s" + std::to_string(s + 1) + "b" + std::to_string(b + 1) + "_";
      const int stride = (b == 0 && s > 0) ? 2 : 1;
      const std::string block_in = g.last();
      g.node(conv(p + "conv1", 1, stride, Padding::same, cin, mid));
      g.node(bn(p + "bn1", mid));
      g.node(relu(p + "relu1"));
      g.node(conv(p + "conv2", 3, 1, Padding::same, mid, mid));
      g.node(bn(p + "bn2", mid));
      g.node(relu(p + "relu2"));
      g.node(conv(p + "conv3", 1, 1, Padding::same, mid, cout));
      g.node(bn(p + "bn3", cout));
      if (b == 0) {
        g.node(conv(p + "short_conv", 1, stride, Padding::same, cin, cout), block_in);
        g.node(bn(p + "short_bn", cout));
        g.node(add(p + "add"), p + "bn3");
        g.edge(p + "short_bn", p + "add");
      } else {
        g.node(add(p + "add"), p + "bn3");
        g.edge(block_in, p + "add");
      }
      g.node(relu(p + "relu"));
      cin = cout;
    }
  }
  g.node(gap("gap"));
  g.node(fc("fc", 2048, num_classes));
  g.node(softmax("softmax"));
  return g.build();
}

/// Canonical Xception: depthwise separable convolutions with residual
/// connections, entry/middle/exit flows, bias-free convolutions, adapted to
/// single-channel input and an 8-class head.
inline ArchitectureConfig xception(int num_classes = 8,
                                   std::array<int, 3> input_shape = {96, 96, 1}) {
  using namespace detail;
  GraphBuilder g("xception", input_shape, num_classes);
  g.node(conv("stem_conv1", 3, 2, Padding::valid, input_shape[2], 32, false));
  g.node(bn("stem_bn1", 32));
  g.node(relu("stem_relu1"));
  g.node(conv("stem_conv2", 3, 1, Padding::valid, 32, 64, false));
  g.node(bn("stem_bn2", 64));
  g.node(relu("stem_relu2"));

  // Entry flow: three down-sampling residual blocks.
  int cin = 64;
  const int entry_channels[3] = {128, 256, 728};
  for (int b = 0; b < 3; ++b) {
    const int cout = entry_channels[b];
    const std::string p = "entry" + std::to_string(b + 1) + "_";
    const std::string block_in = g.last();
    if (b > 0) g.node(relu(p + "prerelu"));
    g.node(sep_conv(p + "sep1", 3, 1, Padding::same, cin, cout, false));
    g.node(bn(p + "bn1", cout));
    g.node(relu(p + "relu1"));
    g.node(sep_conv(p + "sep2", 3, 1, Padding::same, cout, cout, false));
    g.node(bn(p + "bn2", cout));
    g.node(max_pool(p + "pool", 3, 2));
    g.node(conv(p + "short_conv", 1, 2, Padding::same, cin, cout, false), block_in);
    g.node(bn(p + "short_bn", cout));
    g.node(add(p + "add"), p + "pool");
    g.edge(p + "short_bn", p + "add");
    cin = cout;
  }

  // Middle flow: eight identity residual blocks at 728 channels.
  for (int b = 0; b < 8; ++b) {
    const std::string p = "mid" + std::to_string(b + 1) + "_";
    const std::string block_in = g.last();
    for (int i = 1; i <= 3; ++i) {
      const std::string t = std::to_string(i);
      g.node(relu(p + "relu" + t));
      g.node(sep_conv(p + "sep" + t, 3, 1, Padding::same, 728, 728, false));
      g.node(bn(p + "bn" + t, 728));
    }
    g.node(add(p + "add"));
    g.edge(block_in, p + "add");
  }

  // Exit flow.
  {
    const std::string block_in = g.last();
    g.node(relu("exit_relu1"));
    g.node(sep_conv("exit_sep1", 3, 1, Padding::same, 728, 728, false));
    g.node(bn("exit_bn1", 728));
    g.node(relu("exit_relu2"));
    g.node(sep_conv("exit_sep2", 3, 1, Padding::same, 728, 1024, false));
    g.node(bn("exit_bn2", 1024));
    g.node(max_pool("exit_pool", 3, 2));
    g.node(conv("exit_short_conv", 1, 2, Padding::same, 728, 1024, false), block_in);
    g.node(bn("exit_short_bn", 1024));
    g.node(add("exit_add"), "exit_pool");
    g.edge("exit_short_bn", "exit_add");
  }
  g.node(sep_conv("exit_sep3", 3, 1, Padding::same, 1024, 1536, false));
  g.node(bn("exit_bn3", 1536));
  g.node(relu("exit_relu3"));
  g.node(sep_conv("exit_sep4", 3, 1, Padding::same, 1536, 2048, false));
  g.node(bn("exit_bn4", 2048));
  g.node(relu("exit_relu4"));
  g.node(gap("gap"));
  g.node(fc("fc", 2048, num_classes));
  g.node(softmax("softmax"));
  return g.build();
}

inline const std::vector<std::string>& architecture_names() {
  static const std::vector<std::string> names = {"fv2021",   "bondi",    "marra",
                                                 "vgg16b",   "resnet50", "xception"};
  return names;
}

/// Returns the named reference configuration. Shape inference is run as a
/// consistency check before handing the graph out.
inline ArchitectureConfig build_architecture(const std::string& name, int num_classes = 8,
                                             std::array<int, 3> input_shape = {96, 96, 1}) {
  if (num_classes < 2) raise(errc::invalid_argument, "num_classes must be >= 2");
  if (input_shape[0] < 32 || input_shape[1] < 32)
    raise(errc::invalid_argument, "input extent must be >= 32");
  ArchitectureConfig arch;
  if (name == "fv2021") arch = fv2021(num_classes, input_shape);
  else if (name == "bondi") arch = bondi(num_classes, input_shape);
  else if (name == "marra") arch = marra(num_classes, input_shape);
  else if (name == "vgg16b") arch = vgg16b(num_classes, input_shape);
  else if (name == "resnet50") arch = resnet50(num_classes, input_shape);
  else if (name == "xception") arch = xception(num_classes, input_shape);
  else raise(errc::unknown_architecture, "unknown architecture: " + name);
  infer_shapes(arch);
  return arch;
}

}  // namespace veinorigin
