// babelsim: run scenarios, validate scenario files, decode captured packets.
//
// Exit status: 0 success, 1 assertion failure or undecodable packet,
// 2 invalid input.

#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "babel/scenario.hpp"
#include "babel/wire.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  return static_cast<bool>(out);
}

std::optional<babel::scenario::Scenario> load(const std::string& path) {
  auto result = babel::scenario::parse_file(path);
  for (const auto& d : result.diagnostics) std::cerr << path << ": " << babel::scenario::format_diagnostic(d) << "\n";
  return result.scenario;
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, const std::string& trace_out,
            const std::string& dumps_out, bool verbose_assert) {
  auto scenario = load(path);
  if (!scenario) return kExitInvalid;
  const auto report = babel::scenario::run(*scenario, seed);

  if (!trace_out.empty() && !write_file(trace_out, report.trace)) {
    std::cerr << "cannot write " << trace_out << "\n";
    return kExitInvalid;
  }
  if (!dumps_out.empty()) {
    if (!write_file(dumps_out, report.dumps)) {
      std::cerr << "cannot write " << dumps_out << "\n";
      return kExitInvalid;
    }
  } else {
    std::cout << report.dumps;
  }

  std::size_t failed = 0;
  for (const auto& a : report.assertions) {
    if (!a.passed) ++failed;
    if (verbose_assert || !a.passed) {
      std::cout << (a.passed ? "PASS" : "FAIL") << " line " << a.line << ": " << a.description;
      if (!a.detail.empty()) std::cout << " (" << a.detail << ")";
      std::cout << "\n";
    }
  }
  std::cout << "seed " << report.seed << ", " << report.records.size() << " datagrams delivered, "
            << report.assertions.size() - failed << "/" << report.assertions.size() << " assertions passed\n";
  return failed ? kExitFailure : 0;
}

int cmd_validate(const std::string& path) {
  auto scenario = load(path);
  if (!scenario) return kExitInvalid;
  std::cout << path << ": ok (" << scenario->nodes.size() << " nodes, " << scenario->links.size() << " links, "
            << scenario->assertions.size() << " assertions)\n";
  return 0;
}

int cmd_decode(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "cannot open " << path << "\n";
    return kExitInvalid;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();

  std::vector<std::uint8_t> bytes;
  int high = -1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == ':') continue;
    if (c == '0' && i + 1 < text.size() && (text[i + 1] == 'x' || text[i + 1] == 'X') && high < 0) {
      ++i;
      continue;
    }
    if (!std::isxdigit(static_cast<unsigned char>(c))) {
      std::cerr << path << ": not a hex digit at offset " << i << "\n";
      return kExitInvalid;
    }
    const int v = std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : std::tolower(c) - 'a' + 10;
    if (high < 0) {
      high = v;
    } else {
      bytes.push_back(static_cast<std::uint8_t>(high << 4 | v));
      high = -1;
    }
  }
  if (high >= 0) {
    std::cerr << path << ": odd number of hex digits\n";
    return kExitInvalid;
  }

  const auto decoded = babel::wire::decode_packet(bytes);
  if (const auto* err = std::get_if<babel::wire::DecodeError>(&decoded)) {
    std::cerr << "decode error: " << err->message() << "\n";
    return kExitFailure;
  }
  for (const auto& tlv : std::get<babel::wire::Packet>(decoded).tlvs) std::cout << babel::wire::describe(tlv) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Babel routing simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::string trace_out;
  std::string dumps_out;
  bool verbose_assert = false;
  auto* run = app.add_subcommand("run", "Run a scenario and evaluate its assertions");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--trace", trace_out, "Write the message trace to this file");
  run->add_option("--dumps", dumps_out, "Write probe dumps to this file instead of stdout");
  run->add_flag("--assert", verbose_assert, "List every assertion result, not only failures");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("scenario", validate_path, "Scenario file")->required();

  std::string hex_path;
  auto* decode = app.add_subcommand("decode", "Decode a hex-encoded packet");
  decode->add_option("hexfile", hex_path, "File holding the packet as hex")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalid;
  }

  if (*run) return cmd_run(scenario_path, seed, trace_out, dumps_out, verbose_assert);
  if (*validate) return cmd_validate(validate_path);
  return cmd_decode(hex_path);
}
