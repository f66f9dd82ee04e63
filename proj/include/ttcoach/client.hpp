#pragma once

// Blocking client helpers for the service: one-shot HTTP requests and a
// message-stream connection with a background reader.

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace ttcoach {

struct HttpResponse {
    int status = 0;
    std::string body;
};

// Throws std::system_error (via boost) when the service is unreachable.
HttpResponse http_request(const std::string& host, unsigned short port, const std::string& method,
                          const std::string& target, const std::string& body = {});

class StreamClient {
public:
    // Connects and completes the websocket handshake; throws on failure.
    StreamClient(const std::string& host, unsigned short port, const std::string& target);
    ~StreamClient();

    StreamClient(const StreamClient&) = delete;
    StreamClient& operator=(const StreamClient&) = delete;

    // Thread-safe; messages are written in call order.
    void send(std::string text);

    // Next received message, or nullopt on timeout / after the stream closed
    // and every buffered message was consumed.
    std::optional<std::string> receive(std::chrono::milliseconds timeout);

    bool closed() const;
    std::uint16_t close_code() const;
    std::string close_reason() const;

    // Waits until the server closes the stream.
    bool wait_closed(std::chrono::milliseconds timeout);

    void close();

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

}  // namespace ttcoach
