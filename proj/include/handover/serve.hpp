#pragma once

// Streaming decisions over newline-delimited JSON. One engine per stream:
// request {"fy": N, "fz": N, "w": kg}, response {"decision": ..., "p": ...}.

#include "handover/config.hpp"
#include "handover/strategy.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace handover::serve {

class StreamSession {
public:
    StreamSession(strategy::StrategyTag tag, Config config, std::shared_ptr<const gripnet::VaeLstmModel> model);

    // One request line in, one response line out (no trailing newline).
    // Malformed requests get {"error": ...} and leave the engine untouched.
    std::string handle(const std::string& line);
    void reset();
    const strategy::Engine* engine() const { return engine_ ? &*engine_ : nullptr; }

private:
    strategy::StrategyTag tag_;
    Config config_;
    std::shared_ptr<const gripnet::VaeLstmModel> model_;
    std::optional<strategy::Engine> engine_;
    double weight_kg_ = 0.0;
};

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 0;  // 0 picks a free port
};

// Blocks until `stop` is set. `on_listening` receives the bound port.
// Each connection gets its own session; closing the connection drops it.
void run_server(const ServerOptions& options, const std::function<StreamSession()>& make_session, const std::atomic<bool>& stop,
                const std::function<void(int)>& on_listening = {});

}  // namespace handover::serve
