#include "sepnet/griddump.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "json.hpp"
#include "sepnet/errors.hpp"

namespace sepnet {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'S', 'E', 'P', 'G'};

}  // namespace

void save_grid(const std::string& path, const GridSolution& grid) {
  if (grid.values.rank() != static_cast<int>(grid.axes.size())) {
    throw DimensionError("grid has " + std::to_string(grid.axes.size()) +
                         " axes for values of shape " + shape_str(grid.values.shape()));
  }
  json axes = json::array();
  for (std::size_t d = 0; d < grid.axes.size(); ++d) {
    const Tensor& ax = grid.axes[d];
    if (ax.rank() != 1 || ax.numel() != grid.values.dim(static_cast<int>(d))) {
      throw DimensionError("axis " + std::to_string(d) + " has " +
                           std::to_string(ax.numel()) + " points for values of shape " +
                           shape_str(grid.values.shape()));
    }
    json a = json::array();
    for (int64_t i = 0; i < ax.numel(); ++i) a.push_back(static_cast<double>(ax[i]));
    axes.push_back(std::move(a));
  }

  json descriptor;
  if (grid.descriptor.empty()) {
    descriptor = json::object();
  } else {
    descriptor = json::parse(grid.descriptor, nullptr, false);
    if (descriptor.is_discarded()) {
      throw ConfigError("grid descriptor is not valid JSON");
    }
  }

  json header;
  header["shape"] = grid.values.shape();
  header["axes"] = std::move(axes);
  header["dtype"] = "f64le";
  header["descriptor"] = std::move(descriptor);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  const std::string hs = header.dump();
  const uint64_t hlen = hs.size();
  f.write(kMagic, 4);
  f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (int64_t i = 0; i < grid.values.numel(); ++i) {
    const double v = static_cast<double>(grid.values[i]);
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  if (!f) throw ConfigError("write to '" + path + "' failed");
}

GridSolution load_grid(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "'");
  char magic[4];
  uint64_t hlen = 0;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!f || std::memcmp(magic, kMagic, 4) != 0) {
    throw ConfigError("'" + path + "' is not a grid file");
  }
  std::string hs(hlen, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!f) throw ConfigError("'" + path + "' is truncated");
  const json header = json::parse(hs, nullptr, false);
  if (header.is_discarded()) throw ConfigError("'" + path + "' has a corrupt header");
  if (header.at("dtype").get<std::string>() != "f64le") {
    throw ConfigError("'" + path + "' has unsupported dtype '" +
                      header.at("dtype").get<std::string>() + "'");
  }

  const auto shape = header.at("shape").get<std::vector<int64_t>>();
  const auto& axes = header.at("axes");
  if (axes.size() != shape.size()) {
    throw ConfigError("'" + path + "' header lists " + std::to_string(axes.size()) +
                      " axes for a rank-" + std::to_string(shape.size()) + " grid");
  }

  GridSolution out;
  out.descriptor = header.at("descriptor").dump();
  for (std::size_t d = 0; d < shape.size(); ++d) {
    const auto vals = axes[d].get<std::vector<double>>();
    if (static_cast<int64_t>(vals.size()) != shape[d]) {
      throw ConfigError("'" + path + "' axis " + std::to_string(d) +
                        " length does not match the stored shape");
    }
    Tensor ax({shape[d]});
    for (std::size_t i = 0; i < vals.size(); ++i) {
      ax[static_cast<int64_t>(i)] = static_cast<real>(vals[i]);
    }
    out.axes.push_back(std::move(ax));
  }

  out.values = Tensor(std::vector<int64_t>(shape));
  for (int64_t i = 0; i < out.values.numel(); ++i) {
    double v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    out.values[i] = static_cast<real>(v);
  }
  if (!f) throw ConfigError("'" + path + "' is truncated");
  // The payload must end with the values block.
  f.peek();
  if (!f.eof()) throw ConfigError("'" + path + "' has trailing bytes after the values");
  return out;
}

}  // namespace sepnet
