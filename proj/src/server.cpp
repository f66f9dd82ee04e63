#include "ttcoach/server.hpp"

#include "ttcoach/error.hpp"

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <deque>
#include <iostream>
#include <thread>
#include <vector>

namespace ttcoach {

namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Request = http::request<http::string_body>;

void log_error(beast::error_code ec, const char* what) {
    if (ec == net::error::operation_aborted || ec == websocket::error::closed ||
        ec == beast::error::timeout || ec == net::error::eof ||
        ec == net::error::connection_reset) {
        return;
    }
    std::cerr << "ttcoach: " << what << ": " << ec.message() << '\n';
}

// Splits "/sessions/{id}/{in|out}" into (id, kind).
std::optional<std::pair<std::string, std::string>> stream_route(std::string_view target) {
    if (auto q = target.find('?'); q != std::string_view::npos) target = target.substr(0, q);
    constexpr std::string_view prefix = "/sessions/";
    if (target.substr(0, prefix.size()) != prefix) return std::nullopt;
    target.remove_prefix(prefix.size());
    const auto slash = target.find('/');
    if (slash == std::string_view::npos || slash == 0) return std::nullopt;
    std::string id(target.substr(0, slash));
    std::string kind(target.substr(slash + 1));
    if (kind != "in" && kind != "out") return std::nullopt;
    return std::pair{std::move(id), std::move(kind)};
}

// Shared write queue for both stream kinds; all calls run on the socket's strand.
class StreamBase {
protected:
    explicit StreamBase(tcp::socket&& socket) : ws_(std::move(socket)) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.text(true);
    }

    template <typename Self>
    void queue(std::shared_ptr<Self> self, std::string message) {
        outbox_.push_back(std::move(message));
        if (outbox_.size() == 1) write_next(std::move(self));
    }

    template <typename Self>
    void write_next(std::shared_ptr<Self> self) {
        ws_.async_write(net::buffer(outbox_.front()),
                        [self](beast::error_code ec, std::size_t) {
                            static_cast<StreamBase&>(*self).on_written(ec);
                            if (ec) return;
                            self->outbox_.pop_front();
                            if (!self->outbox_.empty()) {
                                self->write_next(self);
                            } else if (self->close_pending_) {
                                self->close_now(self);
                            }
                        });
    }

    template <typename Self>
    void close_with(std::shared_ptr<Self> self, std::string reason) {
        if (closing_) return;
        close_reason_ = std::move(reason);
        close_pending_ = true;
        if (outbox_.empty()) close_now(std::move(self));
    }

    template <typename Self>
    void close_now(std::shared_ptr<Self> self) {
        if (closing_) return;
        closing_ = true;
        ws_.async_close(websocket::close_reason(static_cast<websocket::close_code>(kCloseNotFound), close_reason_),
                        [self](beast::error_code) {});
    }

    virtual void on_written(beast::error_code ec) {
        if (ec) log_error(ec, "stream write");
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    std::deque<std::string> outbox_;
    std::string close_reason_;
    bool close_pending_ = false;
    bool closing_ = false;

public:
    virtual ~StreamBase() = default;
};

class InStream : public StreamBase, public std::enable_shared_from_this<InStream> {
public:
    InStream(tcp::socket&& socket, std::shared_ptr<TrainingService> service, std::string id)
        : StreamBase(std::move(socket)), service_(std::move(service)), id_(std::move(id)) {}

    void run(Request req) {
        ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
            if (ec) return log_error(ec, "in accept");
            if (!self->service_->has_session(self->id_)) {
                return self->close_with(self, "NotFound: no session '" + self->id_ + "'");
            }
            self->read();
        });
    }

private:
    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) return log_error(ec, "in read");
            self->on_message();
        });
    }

    void on_message() {
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        auto outcome = service_->ingest_message(id_, text);
        if (outcome.session_gone) {
            return close_with(shared_from_this(), "NotFound: session '" + id_ + "' was deleted");
        }
        if (outcome.reply) queue(shared_from_this(), std::move(*outcome.reply));
        read();
    }

    std::shared_ptr<TrainingService> service_;
    std::string id_;
};

class OutStream : public StreamBase, public std::enable_shared_from_this<OutStream> {
public:
    OutStream(tcp::socket&& socket, std::shared_ptr<TrainingService> service, std::string id)
        : StreamBase(std::move(socket)), service_(std::move(service)), id_(std::move(id)) {}

    ~OutStream() override {
        if (sub_) service_->unsubscribe(id_, sub_);
    }

    void run(Request req) {
        // Subscribe before the handshake completes so a client that starts
        // streaming right after connecting misses nothing.
        try {
            sub_ = service_->subscribe(id_);
        } catch (const Error&) {
            sub_.reset();
        }
        ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
            if (ec) return log_error(ec, "out accept");
            self->on_accept();
        });
    }

private:
    void on_accept() {
        if (!sub_) return close_with(shared_from_this(), "NotFound: no session '" + id_ + "'");
        std::weak_ptr<OutStream> weak = shared_from_this();
        auto executor = ws_.get_executor();
        sub_->set_notify([weak, executor] {
            net::post(executor, [weak] {
                if (auto self = weak.lock()) self->pump();
            });
        });
        pump();
        read();
    }

    // Moves at most one message from the subscription into the socket at a
    // time; anything that piles up meanwhile is subject to drop-oldest.
    void pump() {
        if (closing_ || writing_) return;
        if (auto msg = sub_->try_pop()) {
            writing_ = true;
            queue(shared_from_this(), std::move(*msg));
        } else if (sub_->closed()) {
            close_with(shared_from_this(), sub_->close_reason());
        }
    }

protected:
    void on_written(beast::error_code ec) override {
        writing_ = false;
        if (ec) {
            log_error(ec, "out write");
            return;
        }
        net::post(ws_.get_executor(), [self = shared_from_this()] { self->pump(); });
    }

private:
    // Drains client frames so close and ping are handled.
    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                if (self->sub_) self->sub_->close("client closed");
                return;
            }
            self->buffer_.consume(self->buffer_.size());
            self->read();
        });
    }

    std::shared_ptr<TrainingService> service_;
    std::string id_;
    std::shared_ptr<Subscription> sub_;
    bool writing_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, std::shared_ptr<TrainingService> service)
        : stream_(std::move(socket)), service_(std::move(service)) {}

    void run() {
        net::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->read(); });
    }

private:
    void read() {
        parser_.emplace();
        parser_->body_limit(64 * 1024 * 1024);
        stream_.expires_after(std::chrono::seconds(60));
        http::async_read(stream_, buffer_, *parser_,
                         [self = shared_from_this()](beast::error_code ec, std::size_t) {
                             self->on_read(ec);
                         });
    }

    void on_read(beast::error_code ec) {
        if (ec == http::error::end_of_stream) {
            stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
            return;
        }
        if (ec) return log_error(ec, "http read");

        Request req = parser_->release();
        if (websocket::is_upgrade(req)) {
            auto route = stream_route(std::string_view(req.target().data(), req.target().size()));
            stream_.expires_never();
            if (route && route->second == "in") {
                std::make_shared<InStream>(stream_.release_socket(), service_, route->first)
                    ->run(std::move(req));
                return;
            }
            if (route && route->second == "out") {
                std::make_shared<OutStream>(stream_.release_socket(), service_, route->first)
                    ->run(std::move(req));
                return;
            }
        }
        respond(req);
    }

    void respond(const Request& req) {
        auto res = std::make_shared<http::response<http::string_body>>();
        res->version(req.version());
        res->keep_alive(req.keep_alive());
        res->set(http::field::server, "ttcoach");
        res->set(http::field::access_control_allow_origin, "*");
        if (req.method() == http::verb::options) {
            res->result(http::status::no_content);
            res->set(http::field::access_control_allow_methods, "GET, POST, DELETE, OPTIONS");
            res->set(http::field::access_control_allow_headers, "Content-Type");
        } else {
            const auto method = req.method_string();
            const auto target = req.target();
            const auto reply = service_->handle(std::string_view(method.data(), method.size()),
                                                std::string_view(target.data(), target.size()),
                                                req.body());
            res->result(static_cast<http::status>(reply.status));
            res->set(http::field::content_type, "application/json");
            res->body() = reply.body.dump();
        }
        res->prepare_payload();
        http::async_write(stream_, *res,
                          [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
                              if (ec) return log_error(ec, "http write");
                              if (res->need_eof()) {
                                  self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                                  return;
                              }
                              self->read();
                          });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    std::optional<http::request_parser<http::string_body>> parser_;
    std::shared_ptr<TrainingService> service_;
};

class Listener : public std::enable_shared_from_this<Listener> {
public:
    Listener(net::io_context& ioc, tcp::endpoint endpoint, std::shared_ptr<TrainingService> service)
        : ioc_(ioc), acceptor_(net::make_strand(ioc)), service_(std::move(service)) {
        acceptor_.open(endpoint.protocol());
        acceptor_.set_option(net::socket_base::reuse_address(true));
        acceptor_.bind(endpoint);
        acceptor_.listen(net::socket_base::max_listen_connections);
    }

    unsigned short port() const { return acceptor_.local_endpoint().port(); }

    void run() { accept(); }

    void close() {
        net::post(acceptor_.get_executor(), [self = shared_from_this()] {
            beast::error_code ec;
            self->acceptor_.close(ec);
        });
    }

private:
    void accept() {
        acceptor_.async_accept(net::make_strand(ioc_),
                               [self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
                                   if (ec) {
                                       if (ec != net::error::operation_aborted) log_error(ec, "accept");
                                       if (!self->acceptor_.is_open()) return;
                                   } else {
                                       tcp::no_delay nodelay(true);
                                       socket.set_option(nodelay, ec);
                                       std::make_shared<HttpSession>(std::move(socket), self->service_)
                                           ->run();
                                   }
                                   self->accept();
                               });
    }

    net::io_context& ioc_;
    tcp::acceptor acceptor_;
    std::shared_ptr<TrainingService> service_;
};

}  // namespace

struct HttpServer::Impl {
    std::shared_ptr<TrainingService> service;
    ServerOptions options;
    net::io_context ioc;
    std::shared_ptr<Listener> listener;
    std::vector<std::thread> threads;
    unsigned short port = 0;
};

HttpServer::HttpServer(std::shared_ptr<TrainingService> service, ServerOptions options)
    : impl_(std::make_unique<Impl>()) {
    impl_->service = std::move(service);
    impl_->options = std::move(options);
}

HttpServer::~HttpServer() {
    stop();
    wait();
}

void HttpServer::start() {
    auto& im = *impl_;
    const auto address = net::ip::make_address(im.options.address);
    im.listener = std::make_shared<Listener>(im.ioc, tcp::endpoint{address, im.options.port}, im.service);
    im.port = im.listener->port();
    im.listener->run();
    const int n = std::max(1, im.options.threads);
    for (int i = 0; i < n; ++i) im.threads.emplace_back([&im] { im.ioc.run(); });
}

void HttpServer::stop() {
    if (impl_->listener) impl_->listener->close();
    impl_->ioc.stop();
}

void HttpServer::wait() {
    for (auto& t : impl_->threads) {
        if (t.joinable()) t.join();
    }
    impl_->threads.clear();
}

unsigned short HttpServer::port() const { return impl_->port; }

}  // namespace ttcoach
