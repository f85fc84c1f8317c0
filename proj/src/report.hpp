#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "zerodisp/cli.hpp"

namespace zerodisp::cli {

std::string trace_csv(const evolution::EvolutionTrace& tr);
std::string decay_svg(const std::string& title, const std::vector<double>& times,
                      const std::vector<std::pair<std::string, std::vector<double>>>& series);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace zerodisp::cli
