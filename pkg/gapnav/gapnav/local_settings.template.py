# Rename this file to 'local_settings.py' and adjust the settings as needed.

# Level of the 'gapnav' logger
LOG_LEVEL = "INFO"

# Run config used when a command gets no --config
# DEFAULT_CONFIG = "/path/to/desk.json"
