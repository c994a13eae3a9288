# Copyright 2024 The schemaforge Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License"). You may not use this file except in compliance
# with the License. A copy of the License is located at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# or in the "LICENSE.txt" file accompanying this file. This file is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES
# OR CONDITIONS OF ANY KIND, express or implied. See the License for the specific language governing permissions and
# limitations under the License.

import logging
import urllib.error
import urllib.request
from urllib.parse import urlparse

import boto3
from botocore.config import Config
from botocore.exceptions import ClientError
from retrying import Retrying
from schemaforge.loader import ImportResolutionError

log = logging.getLogger(__name__)

NOT_FOUND_ERROR_CODES = ("NoSuchKey", "404", "NotFound")


class RemoteFetcher:
    """
    Fetch schema documents from http(s):// and s3:// locations.

    Missing documents return None so the resolver can try the next candidate. Any other failure is retried and,
    once the attempts are exhausted, reported as ImportResolutionError.
    """

    def __init__(self, region=None, boto3_config=None, timeout=30, max_attempts=3, wait_fixed=1000):
        self._region = region
        self._boto3_config = boto3_config or Config(retries={"max_attempts": 1, "mode": "standard"})
        self._timeout = timeout
        self._retrying = Retrying(stop_max_attempt_number=max_attempts, wait_fixed=wait_fixed)

    def fetch(self, location):
        scheme = urlparse(location).scheme
        if scheme == "s3":
            fetch_function = self._fetch_s3
        elif scheme in ("http", "https"):
            fetch_function = self._fetch_http
        else:
            raise ImportResolutionError(f"unsupported remote location '{location}'")
        try:
            return self._retrying.call(fetch_function, location)
        except ImportResolutionError:
            raise
        except Exception as e:
            log.error("Failed when fetching %s with exception %s, message: %s", location, type(e).__name__, e)
            raise ImportResolutionError(f"unable to fetch '{location}': {e}") from e

    def _fetch_s3(self, location):
        parsed = urlparse(location)
        bucket, key = parsed.netloc, parsed.path.lstrip("/")
        s3_client = boto3.client("s3", region_name=self._region, config=self._boto3_config)
        try:
            response = s3_client.get_object(Bucket=bucket, Key=key)
        except ClientError as e:
            if e.response.get("Error", {}).get("Code") in NOT_FOUND_ERROR_CODES:
                log.debug("No object at %s", location)
                return None
            raise
        log.info("Fetched %s", location)
        return response["Body"].read().decode("utf-8")

    def _fetch_http(self, location):
        try:
            with urllib.request.urlopen(location, timeout=self._timeout) as response:  # nosec B310 - scheme checked
                body = response.read()
        except urllib.error.HTTPError as e:
            if e.code == 404:
                log.debug("No document at %s", location)
                return None
            raise
        log.info("Fetched %s", location)
        return body.decode("utf-8")
