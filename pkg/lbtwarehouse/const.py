"""Constants for the warehouse LBT simulator."""

DOMAIN = "lbtwarehouse"
VERSION = "1.0.0"

# Output schema versions, bumped whenever a column changes
RESULTS_SCHEMA_VERSION = 1
TIMELINE_SCHEMA_VERSION = 1
MAC_LOG_SCHEMA_VERSION = 1
ENERGY_LOG_SCHEMA_VERSION = 1
METADATA_SCHEMA_VERSION = 1

# Addresses
AP_ADDRESS = 0
BROADCAST_ADDRESS = 255
JAMMER_ADDRESS = -1
MAX_ADDRESS = 255
MAX_PAYLOAD_LEN = 126

# Frame kinds
FRAME_POLL = "poll"
FRAME_REPLY = "reply"
FRAME_UNICAST = "unicast"
FRAME_START = "start"
FRAME_STOP = "stop"
FRAME_JAM = "jam"
FRAME_KINDS = (
    FRAME_POLL,
    FRAME_REPLY,
    FRAME_UNICAST,
    FRAME_START,
    FRAME_STOP,
    FRAME_JAM,
)

PREAMBLE_NORMAL = "normal"
PREAMBLE_EXTENDED = "extended"

# MAC phases
PHASE_IDLE = "idle"
PHASE_PRE_BACKOFF = "pre-backoff"
PHASE_CCA_COUNTING = "cca-counting"
PHASE_DEFERRED_BUSY = "deferred-busy"
PHASE_TRANSMITTING = "transmitting"

MODE_LBT = "lbt"
MODE_ALOHA = "aloha"

TPS_REDRAW = "redraw"
TPS_RETAIN = "retain"

# Energy DFA states
STATE_SLEEP_LPL = "SLEEP_LPL"
STATE_RX = "RX"
STATE_TX = "TX"
STATE_IDLE = "IDLE"
ENERGY_STATES = (STATE_SLEEP_LPL, STATE_RX, STATE_TX, STATE_IDLE)

# Driver calls that move the energy DFA
CALL_SEND = "send"
CALL_LISTEN = "listen"
CALL_LOW_POWER_LISTEN = "low_power_listen"
CALL_PACKET_RECEIVED = "packet_received"
CALL_TX_DONE = "tx_done"
CALL_SNIFF_START = "sniff_start"
CALL_SNIFF_END = "sniff_end"
DRIVER_CALLS = (
    CALL_SEND,
    CALL_LISTEN,
    CALL_LOW_POWER_LISTEN,
    CALL_PACKET_RECEIVED,
    CALL_TX_DONE,
    CALL_SNIFF_START,
    CALL_SNIFF_END,
)

LPL_AVERAGED = "averaged"
LPL_ALTERNATING = "alternating"

COLLECTION_OUT_OF_BAND = "out_of_band"
COLLECTION_IN_BAND = "in_band"

# Radio defaults
DEFAULT_BIT_RATE = 38_400
DEFAULT_SNIFF_ON_US = 200
DEFAULT_SLEEP_US = 4_700
DEFAULT_PREAMBLE_BYTES = 4
DEFAULT_SYNC_BYTES = 4
DEFAULT_HEADER_BYTES = 4
DEFAULT_CRC_BYTES = 2
# sleep + sniff, so a half-open sniff window can never fall between two preambles
DEFAULT_EXTENDED_PREAMBLE_US = 4_900
# continuous RX kept after discarding a frame addressed to another node
DEFAULT_LPL_RESUME_HOLD_US = 300_000

# MAC defaults
DEFAULT_T_F_US = 5_000
DEFAULT_T_PS_MAX_US = 5_000
DEFAULT_PRE_BACKOFF_MAX_US = 5_000
DEFAULT_BACKOFF_STEP_US = 1
# RSSI settling before a carrier onset becomes visible to the CCA
DEFAULT_CARRIER_SENSE_DELAY_US = 80

# Energy defaults
DEFAULT_VOLTAGE_MV = 3_000
DEFAULT_I_RX_UA = 23_000
DEFAULT_I_LPL_AVG_UA = 1_500
DEFAULT_I_TX_UA = 45_000
DEFAULT_I_IDLE_UA = 1_000
# chosen so that 4.7 ms sleep + 0.2 ms sniff at I_rx averages back to I_lpl_avg
DEFAULT_I_SLEEP_UA = 585

# (from_state, call) -> to_state
DEFAULT_TRANSITIONS = (
    (STATE_IDLE, CALL_LISTEN, STATE_RX),
    (STATE_IDLE, CALL_LOW_POWER_LISTEN, STATE_SLEEP_LPL),
    (STATE_IDLE, CALL_SEND, STATE_TX),
    (STATE_RX, CALL_SEND, STATE_TX),
    (STATE_RX, CALL_PACKET_RECEIVED, STATE_IDLE),
    (STATE_RX, CALL_LOW_POWER_LISTEN, STATE_SLEEP_LPL),
    (STATE_TX, CALL_TX_DONE, STATE_IDLE),
    (STATE_SLEEP_LPL, CALL_LISTEN, STATE_RX),
    (STATE_SLEEP_LPL, CALL_SEND, STATE_TX),
)
# Extra edges for the alternating sleep/sniff refinement of SLEEP_LPL
ALTERNATING_TRANSITIONS = (
    (STATE_SLEEP_LPL, CALL_SNIFF_START, STATE_RX),
    (STATE_RX, CALL_SNIFF_END, STATE_SLEEP_LPL),
)

# Application defaults
DEFAULT_NODE_COUNT = 38
DEFAULT_PRODUCT = 7
DEFAULT_QUANTITY = 12
DEFAULT_POLL_COUNT = 10
DEFAULT_POLL_FIRST_OFFSET_MS = 500
DEFAULT_POLL_SPACING_MS = 1_000
DEFAULT_WINDOW_MS = 11_750
DEFAULT_START_AT_MS = 10
DEFAULT_UNICAST_TIMEOUT_MS = 100
DEFAULT_UNICAST_RETRIES = 3
DEFAULT_SEED = 1

DEFAULT_PAYLOADS = {
    FRAME_POLL: 2,
    FRAME_REPLY: 2,
    FRAME_START: 2,
    FRAME_STOP: 2,
    FRAME_UNICAST: 4,
}
DEFAULT_PREAMBLES = {
    FRAME_POLL: PREAMBLE_EXTENDED,
    FRAME_REPLY: PREAMBLE_NORMAL,
    FRAME_START: PREAMBLE_EXTENDED,
    FRAME_STOP: PREAMBLE_EXTENDED,
    FRAME_UNICAST: PREAMBLE_EXTENDED,
}
STATS_PAYLOAD_LEN = 12

# Event stream ids
SCENARIO_STREAM = "scenario"

# Export file names
RESULTS_FILE = "results.csv"
AGGREGATE_FILE = "aggregate.csv"
TIMELINE_FILE = "timeline.csv"
MAC_LOG_FILE = "mac_log.csv"
ENERGY_LOG_FILE = "energy_log.csv"
NODE_STATS_FILE = "node_stats.csv"
METADATA_FILE = "run-metadata.json"
ALOHA_FILE = "aloha.csv"
PLOT_THROUGHPUT_FILE = "throughput.svg"
PLOT_ENERGY_FILE = "energy.svg"

NOT_A_VALUE = "NA"

# CLI exit codes
EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_ERROR = 2
