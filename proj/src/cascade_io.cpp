#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "rppg/detect.hpp"
#include "rppg/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rppg {

namespace {

Cascade from_json(const json& j) {
  Cascade c;
  const auto& window = j.at("window");
  if (!window.is_array() || window.size() != 2) throw Error("cascade: 'window' must be [w, h]");
  c.window_w = window.at(0).get<int>();
  c.window_h = window.at(1).get<int>();
  for (const auto& js : j.at("stages")) {
    CascadeStage stage;
    stage.threshold = js.at("threshold").get<double>();
    for (const auto& jt : js.at("trees")) {
      CascadeTree tree;
      tree.threshold = jt.at("threshold").get<double>();
      tree.pass_value = jt.at("pass").get<double>();
      tree.fail_value = jt.at("fail").get<double>();
      for (const auto& jr : jt.at("rects")) {
        if (!jr.is_array() || jr.size() != 5) throw Error("cascade: rect must be [x, y, w, h, weight]");
        tree.feature.push_back(
            {{jr[0].get<int>(), jr[1].get<int>(), jr[2].get<int>(), jr[3].get<int>()}, jr[4].get<double>()});
      }
      stage.trees.push_back(std::move(tree));
    }
    c.stages.push_back(std::move(stage));
  }
  validate_cascade(c);
  return c;
}

json to_json(const Cascade& c) {
  json stages = json::array();
  for (const auto& stage : c.stages) {
    json trees = json::array();
    for (const auto& tree : stage.trees) {
      json rects = json::array();
      for (const auto& wr : tree.feature) {
        rects.push_back({wr.rect.x, wr.rect.y, wr.rect.w, wr.rect.h, wr.weight});
      }
      trees.push_back(
          {{"rects", rects}, {"threshold", tree.threshold}, {"pass", tree.pass_value}, {"fail", tree.fail_value}});
    }
    stages.push_back({{"threshold", stage.threshold}, {"trees", trees}});
  }
  return {{"window", {c.window_w, c.window_h}}, {"stages", stages}};
}

}  // namespace

Cascade parse_cascade(const std::string& json_text) {
  try {
    return from_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw Error(std::string("cascade schema violation: ") + e.what());
  }
}

Cascade load_cascade(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open cascade " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_cascade(ss.str());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::string cascade_to_json(const Cascade& c) {
  validate_cascade(c);
  return to_json(c).dump(2) + "\n";
}

void save_cascade(const fs::path& path, const Cascade& c) {
  const auto text = cascade_to_json(c);
  std::ofstream out(path);
  if (!out) throw Error("cannot write cascade " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

namespace {

std::vector<double> numbers(const std::string& s) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(text::parse_double(tok));
  return out;
}

}  // namespace

Cascade convert_opencv_cascade(const fs::path& xml_path) {
  namespace pt = boost::property_tree;
  pt::ptree doc;
  try {
    pt::read_xml(xml_path.string(), doc, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw Error("cannot parse " + xml_path.string() + ": " + e.what());
  }
  const auto root = doc.get_child_optional("opencv_storage.cascade");
  if (!root) throw Error(xml_path.string() + ": no opencv_storage/cascade element (old-style cascades unsupported)");
  try {
    if (root->get<std::string>("featureType", "HAAR") != "HAAR") throw Error("only HAAR cascades are supported");
    Cascade c;
    c.window_w = root->get<int>("width");
    c.window_h = root->get<int>("height");

    std::vector<std::vector<WeightedRect>> features;
    for (const auto& [_, f] : root->get_child("features")) {
      if (f.get<int>("tilted", 0) != 0) throw Error("tilted features are unsupported");
      std::vector<WeightedRect> rects;
      for (const auto& [__, r] : f.get_child("rects")) {
        const auto v = numbers(r.data());
        if (v.size() != 5) throw Error("feature rect needs 5 numbers");
        rects.push_back({{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]),
                          static_cast<int>(v[3])},
                         v[4]});
      }
      features.push_back(std::move(rects));
    }

    // OpenCV compares the raw weighted sum against threshold · area · σ over
    // the window shrunk by one pixel; fold that area into the threshold.
    const double norm_area = static_cast<double>(c.window_w - 2) * (c.window_h - 2);
    for (const auto& [_, s] : root->get_child("stages")) {
      CascadeStage stage;
      stage.threshold = s.get<double>("stageThreshold");
      for (const auto& [__, w] : s.get_child("weakClassifiers")) {
        const auto nodes = numbers(w.get<std::string>("internalNodes"));
        const auto leaves = numbers(w.get<std::string>("leafValues"));
        if (nodes.size() != 4 || leaves.size() != 2) throw Error("only depth-1 (stump) trees are supported");
        const auto idx = static_cast<std::size_t>(nodes[2]);
        if (idx >= features.size()) throw Error("feature index out of range");
        CascadeTree tree;
        tree.feature = features[idx];
        tree.threshold = nodes[3] * norm_area;
        tree.fail_value = leaves[0];
        tree.pass_value = leaves[1];
        stage.trees.push_back(std::move(tree));
      }
      c.stages.push_back(std::move(stage));
    }
    validate_cascade(c);
    return c;
  } catch (const pt::ptree_error& e) {
    throw Error(xml_path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(xml_path.string() + ": " + e.what());
  }
}

}  // namespace rppg
