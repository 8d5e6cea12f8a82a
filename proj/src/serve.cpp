#include "handover/serve.hpp"

#include "handover/error.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <list>
#include <thread>

namespace handover::serve {

using nlohmann::json;

StreamSession::StreamSession(strategy::StrategyTag tag, Config config, std::shared_ptr<const gripnet::VaeLstmModel> model)
    : tag_(tag), config_(std::move(config)), model_(std::move(model))
{
}

void StreamSession::reset()
{
    engine_.reset();
    weight_kg_ = 0.0;
}

std::string StreamSession::handle(const std::string& line)
{
    auto error = [](const std::string& msg) { return json{{"error", msg}}.dump(); };
    const json req = json::parse(line, nullptr, false);
    if (req.is_discarded() || !req.is_object()) return error("request is not a JSON object");
    for (const char* key : {"fy", "fz", "w"})
        if (!req.contains(key) || !req[key].is_number()) return error(std::string("missing numeric field '") + key + "'");
    const double fy = req["fy"].get<double>(), fz = req["fz"].get<double>(), w = req["w"].get<double>();
    if (!std::isfinite(fy) || !std::isfinite(fz)) return error("forces must be finite");
    if (!engine_) {
        if (!(w > 0.0) || !std::isfinite(w)) return error("w must be a positive weight");
        try {
            engine_.emplace(make_strategy(tag_, config_, model_), w, config_.engine);
        } catch (const Error& e) {
            return error(e.what());
        }
        weight_kg_ = w;
    } else if (w != weight_kg_) {
        return error("w changed within a stream; reconnect for a new handover");
    }
    const auto& out = engine_->step(fy, fz);
    json resp{{"decision", std::string(strategy::to_string(out.decision))}};
    if (out.model_p) resp["p"] = *out.model_p;
    return resp.dump();
}

namespace {

void serve_connection(int fd, StreamSession session, const std::atomic<bool>& stop)
{
    std::string buffer;
    char chunk[4096];
    while (!stop.load()) {
        pollfd p{fd, POLLIN, 0};
        const int r = ::poll(&p, 1, 100);
        if (r < 0 && errno != EINTR) break;
        if (r <= 0) continue;
        const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t nl;
        bool ok = true;
        while (ok && (nl = buffer.find('\n')) != std::string::npos) {
            std::string line = buffer.substr(0, nl);
            buffer.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const std::string resp = session.handle(line) + "\n";
            std::size_t sent = 0;
            while (sent < resp.size()) {
                const ssize_t s = ::send(fd, resp.data() + sent, resp.size() - sent, MSG_NOSIGNAL);
                if (s <= 0) {
                    ok = false;
                    break;
                }
                sent += static_cast<std::size_t>(s);
            }
        }
        if (!ok) break;
    }
    ::close(fd);
}

}  // namespace

void run_server(const ServerOptions& options, const std::function<StreamSession()>& make_session, const std::atomic<bool>& stop,
                const std::function<void(int)>& on_listening)
{
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) fail(ErrorKind::Io, std::string("socket: ") + std::strerror(errno));
    const int yes = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(options.port));
    if (::inet_pton(AF_INET, options.host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        fail(ErrorKind::Usage, "invalid IPv4 host '" + options.host + "'");
    }
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 16) != 0) {
        const std::string msg = std::strerror(errno);
        ::close(fd);
        fail(ErrorKind::Io, "cannot listen on " + options.host + ":" + std::to_string(options.port) + ": " + msg);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    if (on_listening) on_listening(ntohs(addr.sin_port));

    std::list<std::thread> workers;
    while (!stop.load()) {
        pollfd p{fd, POLLIN, 0};
        const int r = ::poll(&p, 1, 100);
        if (r <= 0) continue;
        const int client = ::accept(fd, nullptr, nullptr);
        if (client < 0) continue;
        workers.emplace_back(serve_connection, client, make_session(), std::cref(stop));
    }
    ::close(fd);
    for (auto& t : workers) t.join();
}

}  // namespace handover::serve
