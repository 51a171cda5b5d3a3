#include "loft/adapter_io.hpp"

#include <fstream>
#include <string>

#include "json.hpp"
#include "loft/error.hpp"
#include "loft/matrix_io.hpp"

namespace loft {

using nlohmann::json;

std::vector<std::filesystem::path> save_adapter(const std::filesystem::path& dir, const LoftAdapter& a) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;

  json env;
  env["d_in"] = a.d_in();
  env["d_out"] = a.d_out();
  env["base_weight"] = "W0.csv";
  write_matrix_csv(dir / "W0.csv", a.base_weight());
  written.push_back(dir / "W0.csv");

  env["factors"] = json::array();
  for (std::size_t i = 0; i < a.factors().size(); ++i) {
    const LoftFactor& f = a.factors()[i];
    const std::string stem = "factor" + std::to_string(i);
    json entry;
    entry["provenance"] = to_string(f.support.provenance());
    entry["kind"] = to_string(f.transform.kind());
    entry["r"] = f.support.r();
    entry["p"] = stem + "_P.csv";
    write_matrix_csv(dir / (stem + "_P.csv"), f.support.p());
    written.push_back(dir / (stem + "_P.csv"));
    if (f.transform.kind() == TransformKind::orthogonal) {
      entry["e"] = stem + "_E.csv";
      write_matrix_csv(dir / (stem + "_E.csv"), f.transform.skew().matrix());
      written.push_back(dir / (stem + "_E.csv"));
    } else {
      entry["t"] = stem + "_T.csv";
      write_matrix_csv(dir / (stem + "_T.csv"), f.transform.dense());
      written.push_back(dir / (stem + "_T.csv"));
    }
    env["factors"].push_back(entry);
  }

  const auto json_path = dir / "adapter.json";
  std::ofstream out(json_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + json_path.string());
  out << env.dump(2) << '\n';
  written.push_back(json_path);
  return written;
}

LoftAdapter load_adapter(const std::filesystem::path& json_path) {
  std::ifstream in(json_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + json_path.string());
  json env;
  try {
    env = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(json_path.string() + ": " + e.what());
  }
  const auto dir = json_path.parent_path();
  try {
    LoftAdapter a(read_matrix_csv(dir / env.at("base_weight").get<std::string>()));
    if (a.d_in() != env.at("d_in").get<std::size_t>() || a.d_out() != env.at("d_out").get<std::size_t>()) {
      throw ShapeError(json_path.string() + ": base weight shape disagrees with d_in/d_out");
    }
    for (const auto& entry : env.at("factors")) {
      SupportBasis support(read_matrix_csv(dir / entry.at("p").get<std::string>()),
                           provenance_from_string(entry.at("provenance").get<std::string>()));
      if (support.r() != entry.at("r").get<std::size_t>()) {
        throw ShapeError(json_path.string() + ": factor r disagrees with its P file");
      }
      const TransformKind kind = transform_kind_from_string(entry.at("kind").get<std::string>());
      switch (kind) {
        case TransformKind::orthogonal:
          a.add_factor({std::move(support), TransformSpec::orthogonal(SkewParam::from_matrix(
                                                read_matrix_csv(dir / entry.at("e").get<std::string>())))});
          break;
        case TransformKind::free:
          a.add_factor(
              {std::move(support), TransformSpec::free(read_matrix_csv(dir / entry.at("t").get<std::string>()))});
          break;
        case TransformKind::fixed:
          a.add_factor(
              {std::move(support), TransformSpec::fixed(read_matrix_csv(dir / entry.at("t").get<std::string>()))});
          break;
      }
    }
    return a;
  } catch (const json::exception& e) {
    throw ConfigError(json_path.string() + ": " + e.what());
  }
}

}  // namespace loft
