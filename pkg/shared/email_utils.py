import os
import base64
import logging
from typing import Dict, Optional, Sequence

import sendgrid
from sendgrid.helpers.mail import Mail, Attachment, FileContent, FileName, FileType, Disposition

from configs.simulation_configs import NOTIFY_CONFIG

MIME_TYPES = {'.csv': 'text/csv', '.txt': 'text/plain', '.pgm': 'image/x-portable-graymap'}


class EmailClient:
    """SendGrid sender for run summaries and their report files"""

    def __init__(self):
        self.api_key = os.getenv('SENDGRID_API_KEY')
        self.sender = os.getenv('EMAIL_SENDER', 'attoslit@localhost')
        self.client = sendgrid.SendGridAPIClient(self.api_key)

    def _attachment(self, filename: str, file_path: str) -> Attachment:
        with open(file_path, 'rb') as f:
            encoded = base64.b64encode(f.read()).decode()
        mime = MIME_TYPES.get(os.path.splitext(filename)[1], 'application/octet-stream')
        return Attachment(FileContent(encoded), FileName(filename), FileType(mime), Disposition('attachment'))

    def send_report(self, subject: str, content: str, recipients: Sequence[str],
                    attachments: Optional[Dict[str, str]] = None) -> bool:
        message = Mail(
            from_email=self.sender,
            to_emails=list(recipients),
            subject=subject,
            plain_text_content=content
        )
        for filename, file_path in (attachments or {}).items():
            message.add_attachment(self._attachment(filename, file_path))

        try:
            response = self.client.send(message)
            logging.info(f"Run notification sent to {len(recipients)} recipient(s), status {response.status_code}")
            return True
        except Exception as e:
            logging.error(f"Failed to send run notification: {e}")
            return False


def notify_run(command: str, summary: str, recipients: Sequence[str],
               attachments: Optional[Dict[str, str]] = None) -> bool:
    """Mails a finished run's summary; skipped when not configured"""
    if not recipients:
        return False
    if not os.getenv('SENDGRID_API_KEY'):
        logging.info("SENDGRID_API_KEY not set; skipping run notification")
        return False
    subject = NOTIFY_CONFIG['subject_template'].format(command=command)
    return EmailClient().send_report(subject, summary, recipients, attachments)
