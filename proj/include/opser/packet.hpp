#pragma once

#include <cstdint>

#include "opser/types.hpp"

namespace opser {

enum class PacketKind : std::uint8_t { Cid, Data, Ack };

inline const char* packet_kind_name(PacketKind k) {
  switch (k) {
    case PacketKind::Cid: return "CID";
    case PacketKind::Data: return "DATA";
    case PacketKind::Ack: return "ACK";
  }
  return "?";
}

/// Wire-format message. The routing header of a DATA packet is exactly
/// {cl, packet_id, destination_id, source_id}: no forwarder list, so the
/// header length is constant regardless of neighbourhood size.
struct Packet {
  PacketKind kind = PacketKind::Data;

  // Link header.
  NodeId mac_src = 0;
  NodeId mac_dst = kBroadcastId;

  // CID fields.
  NodeId cid_source_id = 0;      // sink's id
  std::uint32_t cid_seq_number = 0;
  NodeId prev_hop_id = 0;
  int cid_ttl = 0;

  // Corona level carried by CID and DATA (the transmitter's level).
  int cl = 0;

  // DATA fields.
  std::uint32_t packet_id = 0;
  NodeId destination_id = 0;
  NodeId source_id = 0;

  std::uint32_t length_bytes = 0;

  FlowKey flow() const { return make_flow_key(source_id, packet_id); }

  static Packet make_cid(NodeId sink, std::uint32_t seq, int cl, NodeId prev_hop,
                         int ttl, std::uint32_t bytes) {
    Packet p;
    p.kind = PacketKind::Cid;
    p.mac_src = prev_hop;
    p.mac_dst = kBroadcastId;
    p.cid_source_id = sink;
    p.cid_seq_number = seq;
    p.prev_hop_id = prev_hop;
    p.cid_ttl = ttl;
    p.cl = cl;
    p.length_bytes = bytes;
    return p;
  }

  static Packet make_data(NodeId source, std::uint32_t packet_id, NodeId dest,
                          int cl, std::uint32_t bytes) {
    Packet p;
    p.kind = PacketKind::Data;
    p.mac_src = source;
    p.mac_dst = kBroadcastId;
    p.source_id = source;
    p.packet_id = packet_id;
    p.destination_id = dest;
    p.cl = cl;
    p.length_bytes = bytes;
    return p;
  }

  static Packet make_ack(NodeId from, NodeId to, NodeId source,
                         std::uint32_t packet_id, std::uint32_t bytes) {
    Packet p;
    p.kind = PacketKind::Ack;
    p.mac_src = from;
    p.mac_dst = to;
    p.source_id = source;
    p.packet_id = packet_id;
    p.length_bytes = bytes;
    return p;
  }
};

}  // namespace opser
