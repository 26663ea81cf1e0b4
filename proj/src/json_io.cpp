#include "ast/json_io.hpp"

#include "ast/errors.hpp"

namespace ast::signal {

void to_json(nlohmann::json& j, const ToneSet& t) {
  j = {{"frequencies", t.frequencies},
       {"amplitude", t.amplitude},
       {"sample_rate", t.sample_rate},
       {"frame_len", t.frame_len}};
}

void from_json(const nlohmann::json& j, ToneSet& t) {
  j.at("frequencies").get_to(t.frequencies);
  j.at("amplitude").get_to(t.amplitude);
  j.at("sample_rate").get_to(t.sample_rate);
  j.at("frame_len").get_to(t.frame_len);
  t.validate();
}

}  // namespace ast::signal

namespace ast::skin {

void to_json(nlohmann::json& j, const SkinSpec& s) {
  j = {{"layer_count", s.layer_count},
       {"side", s.side},
       {"channel_diameter", s.channel_diameter},
       {"runs_per_layer", s.runs_per_layer},
       {"run_offsets", s.run_offsets},
       {"layer_depth_capacity", s.layer_depth_capacity},
       {"max_depth", s.max_depth},
       {"depth_step", s.depth_step},
       {"force_exponent", s.force_exponent},
       {"attenuation", s.attenuation},
       {"frequency_exponent", s.frequency_exponent},
       {"resonance_strength", s.resonance_strength},
       {"effective_speed", s.effective_speed},
       {"decay_length", s.decay_length},
       {"path_step", s.path_step},
       {"load_spread", s.load_spread},
       {"min_open_ratio", s.min_open_ratio}};
}

void from_json(const nlohmann::json& j, SkinSpec& s) {
  j.at("layer_count").get_to(s.layer_count);
  j.at("side").get_to(s.side);
  j.at("channel_diameter").get_to(s.channel_diameter);
  j.at("runs_per_layer").get_to(s.runs_per_layer);
  j.at("run_offsets").get_to(s.run_offsets);
  j.at("layer_depth_capacity").get_to(s.layer_depth_capacity);
  j.at("max_depth").get_to(s.max_depth);
  j.at("depth_step").get_to(s.depth_step);
  j.at("force_exponent").get_to(s.force_exponent);
  j.at("attenuation").get_to(s.attenuation);
  j.at("frequency_exponent").get_to(s.frequency_exponent);
  j.at("resonance_strength").get_to(s.resonance_strength);
  j.at("effective_speed").get_to(s.effective_speed);
  j.at("decay_length").get_to(s.decay_length);
  j.at("path_step").get_to(s.path_step);
  j.at("load_spread").get_to(s.load_spread);
  j.at("min_open_ratio").get_to(s.min_open_ratio);
  s.validate();
}

}  // namespace ast::skin

namespace ast::calib {

void to_json(nlohmann::json& j, const ProtocolSpec& p) {
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& pt : p.grid.points) grid.push_back({{"label", pt.label}, {"x", pt.x}, {"y", pt.y}});
  j = {{"grid", grid},
       {"pegs", p.pegs},
       {"depths", p.depths},
       {"frames_per_press", p.frames_per_press},
       {"noise_sd", p.noise_sd},
       {"base_seed", p.base_seed}};
}

void from_json(const nlohmann::json& j, ProtocolSpec& p) {
  p.grid.points.clear();
  for (const auto& pt : j.at("grid"))
    p.grid.points.push_back({pt.at("label").get<std::string>(), pt.at("x").get<double>(),
                             pt.at("y").get<double>()});
  j.at("pegs").get_to(p.pegs);
  j.at("depths").get_to(p.depths);
  j.at("frames_per_press").get_to(p.frames_per_press);
  j.at("noise_sd").get_to(p.noise_sd);
  j.at("base_seed").get_to(p.base_seed);
}

}  // namespace ast::calib
