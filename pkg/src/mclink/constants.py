"""Test-equipment figures for the radio and molecular links.

Only the receiver sensitivity and transmit power enter any model; the rest is
descriptive metadata.
"""

RECEIVER_SENSITIVITY_DBM = -99.0
TRANSMIT_POWER_MW = 1.0
TRANSMIT_POWER_DBM = 0.0
RADIO_BAND_GHZ = 2.4
PEAK_ANTENNA_GAIN_DBI = 2.1

EQUIPMENT = {
    "radio": {
        "module": "Telegesis ETRX357 (Zigbee)",
        "band_ghz": RADIO_BAND_GHZ,
        "channels": 16,
        "transmit_power_mw": TRANSMIT_POWER_MW,
        "receiver_sensitivity_dbm": RECEIVER_SENSITIVITY_DBM,
        "peak_antenna_gain_dbi": PEAK_ANTENNA_GAIN_DBI,
    },
    "molecular": {
        "sensor": "MQ3 alcohol sensor",
        "carrier": "alcohol",
        "chemical_sensitivity": "alcohol vs. air 30-600x",
        "temperature_sensitivity": "peak to RMS, -10 to 12 C",
        "humidity_sensitivity": "13% (RH 85% to 33%)",
        "response": "linear",
        "air_flow": "positive turbulent, 14 m/s",
        "spray_duration_s": 0.5,
    },
    "environment": {
        "pipe_thickness_mm": 2.0,
        "pipe_inner_diameter_cm": 4.0,
        "waveguide_band_ghz": (4.0, 6.0),
        "pipe_bend_deg": 90,
        "container_volume_cm3": 3600,
        "material": "iron",
    },
}
