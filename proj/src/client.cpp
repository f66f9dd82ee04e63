#include "ttcoach/client.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

namespace ttcoach {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

HttpResponse http_request(const std::string& host, unsigned short port, const std::string& method,
                          const std::string& target, const std::string& body) {
    net::io_context ioc;
    tcp::resolver resolver(ioc);
    beast::tcp_stream stream(ioc);
    stream.connect(resolver.resolve(host, std::to_string(port)));

    http::request<http::string_body> req{http::string_to_verb(method), target, 11};
    req.set(http::field::host, host);
    req.set(http::field::user_agent, "ttcoach");
    if (!body.empty()) {
        req.set(http::field::content_type, "application/json");
        req.body() = body;
    }
    req.prepare_payload();
    http::write(stream, req);

    beast::flat_buffer buffer;
    http::response<http::string_body> res;
    http::read(stream, buffer, res);

    beast::error_code ec;
    stream.socket().shutdown(tcp::socket::shutdown_both, ec);
    return {static_cast<int>(res.result_int()), res.body()};
}

struct StreamClient::Impl : std::enable_shared_from_this<StreamClient::Impl> {
    net::io_context ioc;
    websocket::stream<beast::tcp_stream> ws{ioc};
    beast::flat_buffer buffer;
    std::thread thread;

    std::mutex mutex;
    std::condition_variable cv;
    std::deque<std::string> inbox;
    bool closed = false;
    std::uint16_t code = 0;
    std::string reason;

    std::deque<std::string> outbox;  // touched only on the io thread
    bool closing = false;

    void read() {
        ws.async_read(buffer, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                std::lock_guard lock(self->mutex);
                self->closed = true;
                self->code = self->ws.reason().code;
                self->reason = std::string(self->ws.reason().reason.c_str());
                self->cv.notify_all();
                return;
            }
            {
                std::lock_guard lock(self->mutex);
                self->inbox.push_back(beast::buffers_to_string(self->buffer.data()));
            }
            self->buffer.consume(self->buffer.size());
            self->cv.notify_all();
            self->read();
        });
    }

    void write_next() {
        ws.async_write(net::buffer(outbox.front()),
                       [self = shared_from_this()](beast::error_code ec, std::size_t) {
                           if (ec) return;
                           self->outbox.pop_front();
                           if (!self->outbox.empty()) {
                               self->write_next();
                           } else if (self->closing) {
                               self->send_close();
                           }
                       });
    }

    void send_close() {
        ws.async_close(websocket::close_code::normal, [](beast::error_code) {});
    }
};

StreamClient::StreamClient(const std::string& host, unsigned short port, const std::string& target)
    : impl_(std::make_shared<Impl>()) {
    tcp::resolver resolver(impl_->ioc);
    beast::get_lowest_layer(impl_->ws).connect(resolver.resolve(host, std::to_string(port)));
    beast::get_lowest_layer(impl_->ws).socket().set_option(tcp::no_delay(true));
    impl_->ws.handshake(host + ":" + std::to_string(port), target);
    impl_->ws.text(true);
    impl_->read();
    impl_->thread = std::thread([im = impl_] { im->ioc.run(); });
}

StreamClient::~StreamClient() {
    close();
    if (impl_->thread.joinable()) {
        // Give the close handshake a moment, then tear down.
        std::unique_lock lock(impl_->mutex);
        impl_->cv.wait_for(lock, std::chrono::milliseconds(500), [&] { return impl_->closed; });
        lock.unlock();
        impl_->ioc.stop();
        impl_->thread.join();
    }
}

void StreamClient::send(std::string text) {
    net::post(impl_->ioc, [im = impl_, text = std::move(text)]() mutable {
        if (im->closing) return;
        im->outbox.push_back(std::move(text));
        if (im->outbox.size() == 1) im->write_next();
    });
}

std::optional<std::string> StreamClient::receive(std::chrono::milliseconds timeout) {
    std::unique_lock lock(impl_->mutex);
    impl_->cv.wait_for(lock, timeout, [&] { return !impl_->inbox.empty() || impl_->closed; });
    if (impl_->inbox.empty()) return std::nullopt;
    auto msg = std::move(impl_->inbox.front());
    impl_->inbox.pop_front();
    return msg;
}

bool StreamClient::closed() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->closed;
}

std::uint16_t StreamClient::close_code() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->code;
}

std::string StreamClient::close_reason() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->reason;
}

bool StreamClient::wait_closed(std::chrono::milliseconds timeout) {
    std::unique_lock lock(impl_->mutex);
    return impl_->cv.wait_for(lock, timeout, [&] { return impl_->closed; });
}

void StreamClient::close() {
    net::post(impl_->ioc, [im = impl_] {
        if (im->closing) return;
        im->closing = true;
        // Pending writes go out first; write_next sends the close frame after them.
        if (im->outbox.empty()) im->send_close();
    });
}

}  // namespace ttcoach
