#include "cbnn/tcp_net.hpp"

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include "cbnn/errors.hpp"

namespace cbnn {

namespace {

void set_timeout(int fd, double seconds) {
    timeval tv;
    tv.tv_sec = static_cast<time_t>(seconds);
    tv.tv_usec = static_cast<suseconds_t>((seconds - static_cast<double>(tv.tv_sec)) * 1e6);
    setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

void set_nodelay(int fd) {
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (host.empty() || host == "*") {
        addr.sin_addr.s_addr = INADDR_ANY;
        return addr;
    }
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res)
        throw ConfigError("cannot resolve host " + host);
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    freeaddrinfo(res);
    return addr;
}

} // namespace

PeerList PeerList::parse(const std::string& spec) {
    PeerList p;
    std::size_t at = 0;
    for (int i = 0; i < 3; ++i) {
        std::size_t comma = spec.find(',', at);
        std::string entry =
            comma == std::string::npos ? spec.substr(at) : spec.substr(at, comma - at);
        std::size_t colon = entry.rfind(':');
        if (colon == std::string::npos)
            throw ConfigError("peer entry '" + entry + "' is not host:port");
        p.host[i] = entry.substr(0, colon);
        int port = std::stoi(entry.substr(colon + 1));
        if (port <= 0 || port > 65535) throw ConfigError("bad port in '" + entry + "'");
        p.port[i] = static_cast<std::uint16_t>(port);
        if (comma == std::string::npos) {
            if (i != 2) throw ConfigError("--peers needs three host:port entries");
            break;
        }
        at = comma + 1;
    }
    return p;
}

TcpMesh::TcpMesh(PartyId me, const PeerList& peers, double timeout_s) : me_(me) {
    using clock = std::chrono::steady_clock;
    auto deadline = clock::now() + std::chrono::duration_cast<clock::duration>(
                                       std::chrono::duration<double>(timeout_s));

    // Listen for higher-numbered peers.
    int listener = -1;
    int expected_accepts = 2 - me.id;
    if (expected_accepts > 0) {
        listener = socket(AF_INET, SOCK_STREAM, 0);
        if (listener < 0) throw TransportError("socket() failed");
        int one = 1;
        setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        sockaddr_in addr = resolve("*", peers.port[me.id]);
        if (bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
            close(listener);
            throw TransportError("cannot bind port " + std::to_string(peers.port[me.id]));
        }
        if (listen(listener, 2) != 0) {
            close(listener);
            throw TransportError("listen() failed");
        }
        set_timeout(listener, timeout_s);
    }

    // Dial lower-numbered peers, retrying until they come up.
    for (int j = 0; j < me.id; ++j) {
        sockaddr_in addr = resolve(peers.host[j], peers.port[j]);
        int fd = -1;
        for (;;) {
            fd = socket(AF_INET, SOCK_STREAM, 0);
            if (fd < 0) throw TransportError("socket() failed");
            if (connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) break;
            close(fd);
            if (clock::now() > deadline) {
                if (listener >= 0) close(listener);
                throw TransportError("connect to P" + std::to_string(j) + " timed out");
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
        std::uint8_t hello = static_cast<std::uint8_t>(me.id);
        if (::send(fd, &hello, 1, MSG_NOSIGNAL) != 1) {
            close(fd);
            throw TransportError("handshake send failed");
        }
        set_timeout(fd, timeout_s);
        set_nodelay(fd);
        fd_[j] = fd;
    }

    for (int k = 0; k < expected_accepts; ++k) {
        int fd = accept(listener, nullptr, nullptr);
        if (fd < 0) {
            close(listener);
            throw TransportError("accept timed out at P" + std::to_string(me.id));
        }
        std::uint8_t hello = 0xFF;
        if (::recv(fd, &hello, 1, MSG_WAITALL) != 1 || hello > 2 ||
            static_cast<int>(hello) <= me.id) {
            close(fd);
            close(listener);
            throw TransportError("bad handshake from peer");
        }
        set_timeout(fd, timeout_s);
        set_nodelay(fd);
        fd_[hello] = fd;
    }
    if (listener >= 0) close(listener);
}

TcpMesh::~TcpMesh() {
    for (int fd : fd_)
        if (fd >= 0) close(fd);
}

void TcpMesh::send(PartyId to, Tag tag, std::span<const std::uint8_t> payload) {
    int fd = fd_[to.id];
    if (fd < 0) throw TransportError("no connection to " + to.str());
    std::vector<std::uint8_t> frame(6 + payload.size());
    std::uint32_t len = static_cast<std::uint32_t>(payload.size());
    for (int i = 0; i < 4; ++i) frame[i] = static_cast<std::uint8_t>(len >> (8 * i));
    frame[4] = static_cast<std::uint8_t>(tag);
    frame[5] = static_cast<std::uint8_t>(tag >> 8);
    std::memcpy(frame.data() + 6, payload.data(), payload.size());

    std::size_t sent = 0;
    while (sent < frame.size()) {
        ssize_t n = ::send(fd, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) throw TransportError("send to " + to.str() + " failed: " +
                                         std::string(std::strerror(errno)));
        sent += static_cast<std::size_t>(n);
    }
}

void TcpMesh::read_exact(int fd, std::uint8_t* buf, std::size_t n, PartyId from) {
    std::size_t got = 0;
    while (got < n) {
        ssize_t r = ::recv(fd, buf + got, n - got, 0);
        if (r == 0) throw TransportError("connection to " + from.str() + " closed");
        if (r < 0)
            throw TransportError("recv from " + from.str() + " failed: " +
                                 std::string(std::strerror(errno)));
        got += static_cast<std::size_t>(r);
    }
}

std::vector<std::uint8_t> TcpMesh::recv(PartyId from, Tag tag) {
    int fd = fd_[from.id];
    if (fd < 0) throw TransportError("no connection to " + from.str());
    std::uint8_t header[6];
    read_exact(fd, header, 6, from);
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(header[i]) << (8 * i);
    Tag got_tag = static_cast<Tag>(header[4] | (header[5] << 8));
    std::vector<std::uint8_t> payload(len);
    if (len > 0) read_exact(fd, payload.data(), len, from);
    if (got_tag != tag)
        throw DesyncError("tag mismatch at " + me_.str() + ": expected " +
                          std::to_string(tag) + ", got " + std::to_string(got_tag) +
                          " from " + from.str());
    return payload;
}

} // namespace cbnn
