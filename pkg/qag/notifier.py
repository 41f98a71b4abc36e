"""
Notification system for qag sweeps
"""

import logging
import requests
from typing import Mapping, Optional

logger = logging.getLogger(__name__)


class Notifier:
    """Handles notifications via ntfy.sh"""

    def __init__(self, ntfy_topic: Optional[str] = None):
        self.ntfy_topic = ntfy_topic

    def _post(self, title: str, message: str, tags: str, priority: Optional[str] = None) -> None:
        headers = {"Title": title, "Tags": tags}
        if priority:
            headers["Priority"] = priority
        response = requests.post(
            f"https://ntfy.sh/{self.ntfy_topic}",
            headers=headers,
            data=message.encode('utf-8'),
            timeout=10
        )
        response.raise_for_status()

    def send_sweep_notification(self, summary: Mapping[str, object]) -> bool:
        """Send a notification when a sweep finishes"""
        if not self.ntfy_topic:
            logger.debug("No ntfy.sh topic configured, skipping notification")
            return True  # Return True since this is expected behavior

        try:
            message_parts = [
                "📊 Sweep Finished!",
                "",
                f"🗂️ Scenario: {summary.get('scenario', '?')}",
                f"🔁 Iterations: {summary.get('iterations', '?')}",
                f"📄 Rows: {summary.get('rows', '?')}",
            ]
            for line in summary.get('savings', []) or []:
                message_parts.append(f"⚡ {line}")
            if summary.get('output'):
                message_parts.append(f"💾 Results: {summary['output']}")

            self._post("QAG Sweep Finished", "\n".join(message_parts), "chart_with_upwards_trend,qag")
            logger.info(f"✅ Notification sent to ntfy.sh topic: {self.ntfy_topic}")
            return True

        except Exception as e:
            logger.error(f"❌ Failed to send ntfy.sh notification: {e}")
            return False

    def send_error_notification(self, error_message: str, command: Optional[str] = None) -> bool:
        """Send a notification when a run fails"""
        if not self.ntfy_topic:
            logger.debug("No ntfy.sh topic configured, skipping error notification")
            return True

        try:
            message_parts = [
                "⚠️ QAG Run Failed",
                "",
                f"❌ {error_message}"
            ]
            if command:
                message_parts.append(f"🖥️ Command: {command}")

            self._post("QAG Run Failed", "\n".join(message_parts), "warning,qag", priority="high")
            logger.info(f"✅ Error notification sent to ntfy.sh topic: {self.ntfy_topic}")
            return True

        except Exception as e:
            logger.error(f"❌ Failed to send ntfy.sh error notification: {e}")
            return False
