"""
This submodule contains interfaces for the pluggable components of the migration engine.

They may be useful in writing new backends, or for testing.
"""

from abc import ABCMeta, abstractmethod, abstractproperty
from typing import Any


class Device:
    """
    Interface for a device (or simulated app) that a test can be executed on.

    A device session is owned by one logical thread of control at a time. Every capture increments
    a monotonic capture counter which becomes the ``sequence_no`` of the returned page.
    """
    __metaclass__ = ABCMeta

    @abstractproperty
    def backend(self) -> str:
        """
        Either ``"live"`` or ``"simulated"``.
        """

    @abstractproperty
    def app_id(self) -> str:
        """
        The app under test.
        """

    @abstractmethod
    def capture_page(self) -> Any:
        """
        Captures the current UI hierarchy and screenshot.

        :return: a :class:`guimigrate.model.GuiPage`
        """

    @abstractmethod
    def execute_action(self, action: Any) -> Any:
        """
        Executes an action, capturing the page before and after it.

        :param action: a :class:`guimigrate.model.Action`
        :return: a :class:`guimigrate.device.ExecutionOutcome`
        """

    @abstractmethod
    def reset(self):
        """
        Restarts the app at its initial state.
        """


class VlmBackend:
    """
    Interface for a chat-with-images completion backend.

    Implementations must be safe to call from several threads.
    """
    __metaclass__ = ABCMeta

    @abstractmethod
    def complete(self, bundle: Any) -> Any:
        """
        Sends one assembled prompt and returns the reply.

        :param bundle: a :class:`guimigrate.gateway.PromptBundle`
        :return: a :class:`guimigrate.gateway.VlmReply`
        """


class Clock:
    """
    Interface for the time source used for trace timestamps and wall-time measurement.
    """
    __metaclass__ = ABCMeta

    @abstractmethod
    def now(self) -> float:
        """
        Returns the current time in seconds since the epoch.
        """
