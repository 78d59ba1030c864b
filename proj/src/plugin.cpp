#include "forge/plugin.hpp"

#include <dlfcn.h>

#include <cstdlib>
#include <sstream>

#include "forge/errors.hpp"
#include "forge/synth/oracle.hpp"
#include "forge/vlm/toy.hpp"

namespace forge {

namespace {

std::string base_name(const std::string& id) {
    const auto colon = id.find(':');
    return colon == std::string::npos ? id : id.substr(0, colon);
}

}  // namespace

PluginHub& PluginHub::instance() {
    static PluginHub hub = [] {
        PluginHub h;
        h.register_adapter("toy", [](const std::string& model_id) -> vlm::AdapterPtr {
            vlm::ToyVlmSpec spec;
            const auto colon = model_id.find(':');
            if (colon != std::string::npos)
                spec.seed = std::stoll(model_id.substr(colon + 1));
            return vlm::ToyVlm::cached(spec);
        });
        h.register_oracle("stub",
                          [](const std::string&) { return std::make_shared<synth::StubOracle>(); });
        return h;
    }();
    return hub;
}

void PluginHub::register_adapter(const std::string& name, AdapterFactory factory) {
    adapters_[name] = std::move(factory);
}

void PluginHub::register_oracle(const std::string& name, OracleFactory factory) {
    oracles_[name] = std::move(factory);
}

vlm::AdapterPtr PluginHub::make_adapter(const std::string& model_id) {
    const std::string name = base_name(model_id);
    auto it = adapters_.find(name);
    if (it == adapters_.end() && try_load_plugin(name)) it = adapters_.find(name);
    if (it == adapters_.end())
        throw CapabilityError("no adapter registered for model id '" + model_id + "'");
    return it->second(model_id);
}

std::shared_ptr<synth::TextOracle> PluginHub::make_oracle(const std::string& oracle_id) {
    const std::string name = base_name(oracle_id);
    auto it = oracles_.find(name);
    if (it == oracles_.end() && try_load_plugin(name)) it = oracles_.find(name);
    if (it == oracles_.end())
        throw CapabilityError("no oracle registered for id '" + oracle_id + "'");
    return it->second(oracle_id);
}

bool PluginHub::try_load_plugin(const std::string& name) {
    const char* path = std::getenv("FORGE_PLUGIN_PATH");
    if (!path || name.empty()) return false;

    std::stringstream dirs(path);
    std::string dir;
    while (std::getline(dirs, dir, ':')) {
        if (dir.empty()) continue;
        const std::string so = dir + "/" + name + ".so";
        void* handle = dlopen(so.c_str(), RTLD_NOW | RTLD_LOCAL);
        if (!handle) continue;
        using RegisterFn = void (*)(PluginHub&);
        auto fn = reinterpret_cast<RegisterFn>(dlsym(handle, "forge_plugin_register"));
        if (!fn) {
            dlclose(handle);
            continue;
        }
        fn(*this);  // handle stays loaded for the process lifetime
        return true;
    }
    return false;
}

}  // namespace forge
