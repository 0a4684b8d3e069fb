#pragma once

#include <string>
#include <thread>

#include <httplib.h>

namespace sdq::testing {

// httplib server on an ephemeral localhost port, serving from a background
// thread for the lifetime of the object. Register handlers before start().
class StubServer {
 public:
  httplib::Server server;

  void start() {
    port_ = server.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~StubServer() {
    server.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const noexcept { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  int port_ = 0;
  std::thread thread_;
};

}  // namespace sdq::testing
