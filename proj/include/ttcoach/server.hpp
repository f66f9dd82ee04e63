#pragma once

#include "ttcoach/service.hpp"

#include <memory>
#include <string>

namespace ttcoach {

struct ServerOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8080;  // 0 picks a free port
    int threads = 2;
};

// HTTP + WebSocket front end for a TrainingService. Plain HTTP requests go to
// TrainingService::handle; upgrades on /sessions/{id}/in and
// /sessions/{id}/out become message streams.
class HttpServer {
public:
    HttpServer(std::shared_ptr<TrainingService> service, ServerOptions options);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Binds and starts the worker threads; returns once accepting.
    void start();
    void stop();
    void wait();

    unsigned short port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ttcoach
