#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "forge/vlm/adapter.hpp"

namespace forge {

namespace synth {
class TextOracle;
}

// Registry for model adapters and text oracles. Built-ins register at static
// init; external providers are shared objects found via FORGE_PLUGIN_PATH
// (colon-separated directories) that export:
//
//     extern "C" void forge_plugin_register(forge::PluginHub& hub);
//
// Plugin lookup for id "name" or "name:variant" loads "<dir>/name.so".
class PluginHub {
public:
    using AdapterFactory = std::function<vlm::AdapterPtr(const std::string& model_id)>;
    using OracleFactory = std::function<std::shared_ptr<synth::TextOracle>(const std::string& oracle_id)>;

    static PluginHub& instance();

    void register_adapter(const std::string& name, AdapterFactory factory);
    void register_oracle(const std::string& name, OracleFactory factory);

    // Resolve by id; the part before ':' selects the factory, the full id is
    // passed through so factories can parse variants (e.g. "toy:7").
    vlm::AdapterPtr make_adapter(const std::string& model_id);
    std::shared_ptr<synth::TextOracle> make_oracle(const std::string& oracle_id);

private:
    bool try_load_plugin(const std::string& name);

    std::map<std::string, AdapterFactory> adapters_;
    std::map<std::string, OracleFactory> oracles_;
};

}  // namespace forge
